//! Adaptive resampling test (ART) baseline.
//!
//! ART looks only at the predictor with the largest absolute marginal slope
//! and builds a bias-corrected bootstrap interval for `√n φ̂_l̂`. When neither
//! the sample nor the bootstrap t-ratio clears the threshold `λₙ`, the
//! selected index is treated as unidentified and the replicate is replaced by
//! a re-selected maximum over recentered bootstrap slopes. `λₙ` itself is
//! tuned by a separate wild bootstrap (the "double bootstrap").
//!
//! All indices in this module are 0-based except `ArtResult::l_hat`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kernel::{dot, mean};
use crate::marginal::{argmax_first, fit_marginal, MarginalFit};
use crate::rng;
use crate::sample::{make_blocks, standardize, BlockPartition, Sample};

/// Redraws allowed when a resample leaves a predictor constant.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArtFlavor {
    /// iid resampling of `(yₜ, xₜ)` rows.
    #[default]
    Nb,
    /// Wild bootstrap of each marginal regression with shared multipliers.
    Pwb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtConfig {
    pub alpha: f64,
    pub outer_reps: usize,
    pub tuning_reps: usize,
    pub flavor: ArtFlavor,
    pub master_seed: u64,
    /// Multiplier block length for the wild-bootstrap draws.
    #[serde(default = "one")]
    pub block_size: usize,
}

fn one() -> usize {
    1
}

impl Default for ArtConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            outer_reps: 1000,
            tuning_reps: 1000,
            flavor: ArtFlavor::Nb,
            master_seed: 0,
            block_size: 1,
        }
    }
}

impl ArtConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if self.outer_reps < 1 || self.tuning_reps < 1 {
            return Err(Error::InvalidConfig("replicate counts must be at least 1".into()));
        }
        if self.block_size < 1 || self.block_size > n {
            return Err(Error::ConfigMismatch(format!(
                "block size {} invalid for n = {n}",
                self.block_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtResult {
    /// 1-based index of the selected predictor.
    pub l_hat: usize,
    /// Conventional t-ratio of the selected slope.
    pub t_n: f64,
    /// `√n φ̂_l̂`, the quantity compared with the interval.
    pub statistic: f64,
    pub interval: (f64, f64),
    pub reject: bool,
    pub p_value: f64,
    pub omega_star: f64,
    pub lambda_n: f64,
}

/// Smallest index attaining `max |φ̂ᵢ|`, 0-based.
pub fn select_max_index(fit: &MarginalFit) -> usize {
    let abs: Vec<f64> = fit.phi.iter().map(|v| v.abs()).collect();
    argmax_first(&abs)
}

/// Upper `q` quantile of the standard normal.
pub fn normal_upper_quantile(q: f64) -> f64 {
    // -Φ⁻¹(q) keeps precision for small q
    -Normal::standard().inverse_cdf(q)
}

/// `λₙ(ω, α) = max{√(ω ln n), 𝒵_{α/(2p)}}`.
pub fn lambda_n(omega: f64, alpha: f64, n: usize, p: usize) -> f64 {
    let floor = normal_upper_quantile(alpha / (2.0 * p as f64));
    (omega * (n as f64).ln()).sqrt().max(floor)
}

/// Slope, conventional standard error and centered column for one predictor
/// of a (possibly resampled) data set.
struct SlopeFit {
    phi: f64,
    se: f64,
}

fn slope_and_se(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if x.iter().all(|a| *a == x[0]) {
        return None;
    }
    let n = x.len() as f64;
    let xm = mean(x);
    let ym = mean(y);
    let xc: Vec<f64> = x.iter().map(|a| a - xm).collect();
    let ss = dot(&xc, &xc);
    if !(ss > 0.0) {
        return None;
    }
    let yc: Vec<f64> = y.iter().map(|a| a - ym).collect();
    let phi = dot(&xc, &yc) / ss;
    let rss: f64 = xc.iter().zip(&yc).map(|(a, b)| (b - phi * a).powi(2)).sum();
    Some(SlopeFit {
        phi,
        se: ((rss / n) / ss).sqrt(),
    })
}

/// Sample-level quantities every ART replicate needs.
#[derive(Debug, Clone)]
pub struct ArtContext<'a> {
    sample: &'a Sample,
    fit: &'a MarginalFit,
    l: usize,
    t_n: f64,
}

impl<'a> ArtContext<'a> {
    pub fn new(sample: &'a Sample, fit: &'a MarginalFit) -> Result<Self> {
        if fit.n != sample.n() || fit.p != sample.p() {
            return Err(Error::Shape("fit does not belong to this sample".into()));
        }
        let l = select_max_index(fit);
        let SlopeFit { phi, se } = slope_and_se(sample.column(l), sample.y()).ok_or(Error::DegenerateColumn(l + 1))?;
        let t_n = if se > 0.0 {
            phi / se
        } else {
            f64::INFINITY * phi.signum()
        };
        Ok(Self { sample, fit, l, t_n })
    }

    /// Selected index, 0-based.
    pub fn l_hat(&self) -> usize {
        self.l
    }

    pub fn t_n(&self) -> f64 {
        self.t_n
    }

    fn root_n(&self) -> f64 {
        (self.sample.n() as f64).sqrt()
    }

    /// `√n φ̂_l̂`.
    pub fn statistic(&self) -> f64 {
        self.root_n() * self.fit.phi[self.l]
    }

    fn combine(
        &self,
        lambda: f64,
        t_star: f64,
        shift_l: f64,
        all_shifts: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<f64> {
        if t_star.abs() > lambda || self.t_n.abs() > lambda {
            return Ok(self.root_n() * shift_l);
        }
        let shifts = all_shifts()?;
        let abs: Vec<f64> = shifts.iter().map(|v| v.abs()).collect();
        Ok(self.root_n() * shifts[argmax_first(&abs)])
    }

    /// NB replicate on explicit row indices (0-based, with repetition).
    pub fn replicate_with_indices(&self, lambda: f64, idx: &[usize]) -> Result<f64> {
        let s = self.sample;
        let y: Vec<f64> = idx.iter().map(|&t| s.y()[t]).collect();
        let resampled = |i: usize| -> Vec<f64> {
            let col = s.column(i);
            idx.iter().map(|&t| col[t]).collect()
        };
        let sl = slope_and_se(&resampled(self.l), &y).ok_or(Error::DegenerateResample(1))?;
        let t_star = if sl.se > 0.0 { sl.phi / sl.se } else { f64::INFINITY };
        self.combine(lambda, t_star, sl.phi - self.fit.phi[self.l], || {
            (0..s.p())
                .map(|i| {
                    slope_and_se(&resampled(i), &y)
                        .map(|f| f.phi - self.fit.phi[i])
                        .ok_or(Error::DegenerateResample(1))
                })
                .collect()
        })
    }

    /// Wild-bootstrap replicate: `y*ᵢ,ₜ = δ̂ᵢ + φ̂ᵢxᵢ,ₜ + v̂ᵢ,ₜηₜ` for each `i`.
    pub fn replicate_with_multipliers(&self, lambda: f64, eta: &[f64]) -> Result<f64> {
        let s = self.sample;
        let shift = |i: usize| -> (f64, f64) {
            let x = s.column(i);
            let xm = self.fit.x_mean[i];
            let ss = self.fit.x_centered_ss[i];
            let mut u: Vec<f64> = self.fit.resid(i).iter().zip(eta).map(|(v, e)| v * e).collect();
            let um = mean(&u);
            u.iter_mut().for_each(|a| *a -= um);
            let xc: Vec<f64> = x.iter().map(|a| a - xm).collect();
            let d = dot(&xc, &u) / ss;
            let rss: f64 = xc.iter().zip(&u).map(|(a, b)| (b - d * a).powi(2)).sum();
            let se = ((rss / s.n() as f64) / ss).sqrt();
            (d, se)
        };
        let (d, se) = shift(self.l);
        let t_star = if se > 0.0 {
            (self.fit.phi[self.l] + d) / se
        } else {
            f64::INFINITY
        };
        self.combine(lambda, t_star, d, || Ok((0..s.p()).map(|i| shift(i).0).collect()))
    }

    /// One bias-corrected replicate `𝒜*ₙ(α)`.
    pub fn replicate<R: Rng + ?Sized>(
        &self,
        lambda: f64,
        stream: &mut R,
        flavor: ArtFlavor,
        part: &BlockPartition,
    ) -> Result<f64> {
        let n = self.sample.n();
        match flavor {
            ArtFlavor::Nb => {
                for _ in 0..MAX_REDRAWS {
                    let idx: Vec<usize> = (0..n).map(|_| stream.random_range(0..n)).collect();
                    match self.replicate_with_indices(lambda, &idx) {
                        Err(Error::DegenerateResample(_)) => continue,
                        other => return other,
                    }
                }
                Err(Error::DegenerateResample(MAX_REDRAWS))
            }
            ArtFlavor::Pwb => {
                let eta = crate::bootstrap::draw_multipliers(part, stream).eta;
                self.replicate_with_multipliers(lambda, &eta)
            }
        }
    }

    /// Tuning draw `ℛ = √n |φ̂*_l̂ − φ̂_l̂|` from a Gaussian wild bootstrap of
    /// the selected regression.
    fn tuning_draw(&self, eta: &[f64]) -> f64 {
        let x = self.sample.column(self.l);
        let xm = self.fit.x_mean[self.l];
        let mut u: Vec<f64> = self.fit.resid(self.l).iter().zip(eta).map(|(v, e)| v * e).collect();
        let um = mean(&u);
        u.iter_mut().for_each(|a| *a -= um);
        let xc: Vec<f64> = x.iter().map(|a| a - xm).collect();
        self.root_n() * (dot(&xc, &u) / self.fit.x_centered_ss[self.l]).abs()
    }
}

/// Standalone replicate with the default multiplier block length of 1.
pub fn art_replicate<R: Rng + ?Sized>(
    s: &Sample,
    fit: &MarginalFit,
    lambda: f64,
    stream: &mut R,
    flavor: ArtFlavor,
) -> Result<f64> {
    let ctx = ArtContext::new(s, fit)?;
    ctx.replicate(lambda, stream, flavor, &make_blocks(s.n(), 1)?)
}

/// Target rank `⌈αn⌉` for the tuning draws.
pub fn tuning_rank(alpha: f64, n: usize) -> Result<usize> {
    let an = alpha * n as f64;
    if !(an >= 1.0 - 1e-12) {
        return Err(Error::InvalidConfig(format!("alpha * n = {an} is below 1")));
    }
    Ok((an - 1e-9).ceil() as usize)
}

/// Pick `ω*` so that `√(ω* ln n)` hits the `⌈αn⌉`-th largest tuning draw,
/// then floor `λₙ` at `𝒵_{α/(2p)}`.
pub fn omega_lambda_from_draws(draws: &[f64], alpha: f64, n: usize, p: usize) -> Result<(f64, f64)> {
    let rank = tuning_rank(alpha, n)?;
    if draws.len() < rank {
        return Err(Error::InsufficientReps {
            needed: rank,
            got: draws.len(),
        });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let target = sorted[rank - 1];
    let omega = target * target / (n as f64).ln();
    Ok((omega, lambda_n(omega, alpha, n, p)))
}

/// Double-bootstrap tuning of `λₙ`; draw `j` uses the stream at
/// `(seed, j)`.
pub fn tune_lambda(
    s: &Sample,
    fit: &MarginalFit,
    alpha: f64,
    tuning_reps: usize,
    seed: u64,
    block_size: usize,
) -> Result<(f64, f64)> {
    let rank = tuning_rank(alpha, s.n())?;
    if tuning_reps < rank {
        return Err(Error::InsufficientReps {
            needed: rank,
            got: tuning_reps,
        });
    }
    let ctx = ArtContext::new(s, fit)?;
    let part = make_blocks(s.n(), block_size)?;
    let draws: Vec<f64> = (0..tuning_reps)
        .into_par_iter()
        .map(|j| {
            let mut stream = rng::stream(seed, &[j as u64]);
            let eta = crate::bootstrap::draw_multipliers(&part, &mut stream).eta;
            ctx.tuning_draw(&eta)
        })
        .collect();
    omega_lambda_from_draws(&draws, alpha, s.n(), s.p())
}

/// Interval from the `k`-th smallest and `k`-th largest replicates with
/// `k = ⌈(α/2)M⌉`, the rejection decision, and the p-value
/// `(1/M)#{|𝒜*ⱼ| > |√n φ̂_l̂|}`.
pub fn art_decision(replicates: &[f64], statistic: f64, alpha: f64) -> ((f64, f64), bool, f64) {
    let m = replicates.len();
    assert!(m > 0, "need at least one replicate");
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = (((alpha / 2.0) * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    let interval = (sorted[k - 1], sorted[m - k]);
    let (lo, hi) = if interval.0 <= interval.1 {
        interval
    } else {
        (interval.1, interval.0)
    };
    let reject = statistic < lo || statistic > hi;
    let p_value = replicates.iter().filter(|a| a.abs() > statistic.abs()).count() as f64 / m as f64;
    ((lo, hi), reject, p_value)
}

/// Full ART: standardize, select, tune `λₙ`, bootstrap, decide.
pub fn art_test(s: &Sample, cfg: &ArtConfig) -> Result<ArtResult> {
    cfg.validate(s.n())?;
    let z = standardize(s)?;
    let fit = fit_marginal(&z)?;
    let ctx = ArtContext::new(&z, &fit)?;
    let (omega_star, lambda) = tune_lambda(
        &z,
        &fit,
        cfg.alpha,
        cfg.tuning_reps,
        rng::derive_seed(cfg.master_seed, &[1]),
        cfg.block_size,
    )?;
    let part = make_blocks(z.n(), cfg.block_size)?;
    let outer_seed = rng::derive_seed(cfg.master_seed, &[2]);
    let replicates = (0..cfg.outer_reps)
        .into_par_iter()
        .map(|j| {
            let mut stream = rng::stream(outer_seed, &[j as u64]);
            ctx.replicate(lambda, &mut stream, cfg.flavor, &part)
        })
        .collect::<Result<Vec<f64>>>()?;
    let statistic = ctx.statistic();
    let (interval, reject, p_value) = art_decision(&replicates, statistic, cfg.alpha);
    Ok(ArtResult {
        l_hat: ctx.l_hat() + 1,
        t_n: ctx.t_n(),
        statistic,
        interval,
        reject,
        p_value,
        omega_star,
        lambda_n: lambda,
    })
}
