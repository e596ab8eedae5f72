//! Dependent wild bootstrap (DWB) and parametric wild bootstrap (PWB) for the
//! max/ave screening statistics.
//!
//! Both methods share one multiplier construction: a standard normal draw per
//! time block, copied to every index in the block. DWB multiplies centered
//! score contributions of each marginal regression by the multipliers; PWB
//! rebuilds a null-imposed response `ȳ + (yₜ − ȳ)ηₜ` and refits every slope.
//!
//! Both replicate maps are linear in the multipliers, so each kernel
//! precomputes an `n × p` coefficient matrix once and a replicate costs one
//! pass over it.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{dot, mean};
use crate::marginal::{compute_statistic, fit_marginal, StatKind, StatisticValue};
use crate::rng;
use crate::sample::{make_blocks, standardize, BlockPartition, Sample};
use crate::weights::{compute_weights, WeightScheme};

/// Designs with `det Ĥᵢ` at or below this are treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dwb,
    #[default]
    Pwb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: Method,
    pub replicates: usize,
    pub block_size: usize,
    pub weight_scheme: WeightScheme,
    pub statistic_kind: StatKind,
    pub alpha: f64,
    pub master_seed: u64,
    /// PWB only: recompute the weights on every synthetic response instead
    /// of reusing the ones from the original sample.
    #[serde(default)]
    pub recompute_weights: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            method: Method::Pwb,
            replicates: 1000,
            block_size: 1,
            weight_scheme: WeightScheme::Unit,
            statistic_kind: StatKind::Max,
            alpha: 0.05,
            master_seed: 0,
            recompute_weights: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if self.block_size < 1 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        if self.block_size > n {
            return Err(Error::ConfigMismatch(format!(
                "block size {} exceeds n = {n}",
                self.block_size
            )));
        }
        self.weight_scheme.validate(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub observed: StatisticValue,
    pub replicate_values: Vec<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub config_echo: BootstrapConfig,
}

/// Block-constant multipliers: `ηₜ = ξₛ` for `t` in block `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierDraw {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl MultiplierDraw {
    /// Expand per-block values over a partition.
    pub fn from_blocks(part: &BlockPartition, xi: Vec<f64>) -> Self {
        assert_eq!(xi.len(), part.len(), "one multiplier per block");
        let mut eta = vec![0.0; part.n()];
        for (r, v) in part.blocks().iter().zip(&xi) {
            eta[r.clone()].fill(*v);
        }
        Self { xi, eta }
    }

    /// Every entry equal to `c`.
    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            xi: vec![c],
            eta: vec![c; n],
        }
    }
}

/// One standard normal per block, remainder block included.
pub fn draw_multipliers<R: Rng + ?Sized>(part: &BlockPartition, stream: &mut R) -> MultiplierDraw {
    let xi = (0..part.len()).map(|_| stream.sample(StandardNormal)).collect();
    MultiplierDraw::from_blocks(part, xi)
}

/// A precomputed linear replicate map `η ↦ (|cᵢ·η|)ᵢ`.
#[derive(Debug, Clone)]
struct LinearKernel {
    n: usize,
    kind: StatKind,
    /// Column-major `n × p`; column `i` already carries `√n 𝒲ᵢ` and all
    /// regression scaling.
    coef: Vec<f64>,
    /// PWB multiplies the null residuals into η and recenters the product
    /// before projecting; DWB projects η directly.
    resid: Option<Vec<f64>>,
}

impl LinearKernel {
    fn values(&self, eta: &[f64]) -> Vec<f64> {
        assert_eq!(eta.len(), self.n, "multiplier length must equal n");
        let u: std::borrow::Cow<[f64]> = match &self.resid {
            Some(v) => {
                let mut u: Vec<f64> = v.iter().zip(eta).map(|(a, b)| a * b).collect();
                let m = mean(&u);
                u.iter_mut().for_each(|a| *a -= m);
                u.into()
            }
            None => eta.into(),
        };
        self.coef.chunks_exact(self.n).map(|c| dot(c, &u).abs()).collect()
    }

    fn replicate(&self, eta: &[f64]) -> f64 {
        self.kind.reduce(&self.values(eta))
    }
}

fn check_weights(s: &Sample, weights: &[f64]) -> Result<()> {
    if weights.len() != s.p() {
        return Err(Error::Shape(format!("expected {} weights", s.p())));
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::NonPositiveWeight(i + 1));
    }
    Ok(())
}

/// DWB replicate map for a sample.
///
/// With `𝐱ᵢ,ₜ = [1, x_{i,t}]′`, `Ĥᵢ = (1/n)∑ 𝐱ᵢ,ₜ𝐱ᵢ,ₜ′` and
/// `zᵢ,ₜ = 𝐱ᵢ,ₜ(yₜ − ȳ)`, predictor `i` contributes
/// `|√n 𝒲ᵢ e₂′Ĥᵢ⁻¹ (1/n)∑ₜ ηₜ (zᵢ,ₜ − z̄ᵢ)|`.
#[derive(Debug, Clone)]
pub struct DwbKernel(LinearKernel);

impl DwbKernel {
    pub fn new(s: &Sample, weights: &[f64], kind: StatKind) -> Result<Self> {
        check_weights(s, weights)?;
        let n = s.n();
        let nf = n as f64;
        let y_mean = mean(s.y());
        let yc: Vec<f64> = s.y().iter().map(|v| v - y_mean).collect();
        let mut coef = Vec::with_capacity(n * s.p());
        for (i, x) in s.columns().enumerate() {
            let h01 = mean(x);
            let h11 = dot(x, x) / nf;
            let det = h11 - h01 * h01;
            if !(det.abs() > SINGULAR_DET) {
                return Err(Error::SingularDesign(i + 1));
            }
            // second row of Ĥ⁻¹ is [−h01, h00] / det with h00 = 1
            let (r0, r1) = (-h01 / det, 1.0 / det);
            let z1: Vec<f64> = x.iter().zip(&yc).map(|(a, b)| a * b).collect();
            let z0_mean = mean(&yc);
            let z1_mean = mean(&z1);
            let scale = nf.sqrt() * weights[i] / nf;
            coef.extend(
                yc.iter()
                    .zip(&z1)
                    .map(|(z0, z1)| scale * (r0 * (z0 - z0_mean) + r1 * (z1 - z1_mean))),
            );
        }
        Ok(Self(LinearKernel {
            n,
            kind,
            coef,
            resid: None,
        }))
    }

    pub fn replicate(&self, eta: &MultiplierDraw) -> f64 {
        self.0.replicate(&eta.eta)
    }

    /// Per-predictor magnitudes of one replicate.
    pub fn per_index(&self, eta: &MultiplierDraw) -> Vec<f64> {
        self.0.values(&eta.eta)
    }
}

/// PWB replicate map for a sample with fixed weights.
///
/// The refitted slope on `y*ₜ = ȳ + (yₜ − ȳ)ηₜ` is
/// `∑ₜ (x_{i,t} − x̄ᵢ)(y*ₜ − ȳ*) / ∑ₜ (x_{i,t} − x̄ᵢ)²`.
#[derive(Debug, Clone)]
pub struct PwbKernel(LinearKernel);

impl PwbKernel {
    pub fn new(s: &Sample, weights: &[f64], kind: StatKind) -> Result<Self> {
        check_weights(s, weights)?;
        let n = s.n();
        let nf = n as f64;
        let y_mean = mean(s.y());
        let mut coef = Vec::with_capacity(n * s.p());
        for (i, x) in s.columns().enumerate() {
            let xm = mean(x);
            let xc: Vec<f64> = x.iter().map(|a| a - xm).collect();
            let ss = dot(&xc, &xc);
            if !(ss / nf > SINGULAR_DET) {
                return Err(Error::SingularDesign(i + 1));
            }
            let scale = nf.sqrt() * weights[i] / ss;
            coef.extend(xc.iter().map(|a| scale * a));
        }
        Ok(Self(LinearKernel {
            n,
            kind,
            coef,
            resid: Some(s.y().iter().map(|v| v - y_mean).collect()),
        }))
    }

    pub fn replicate(&self, eta: &MultiplierDraw) -> f64 {
        self.0.replicate(&eta.eta)
    }

    pub fn per_index(&self, eta: &MultiplierDraw) -> Vec<f64> {
        self.0.values(&eta.eta)
    }
}

/// The null-imposed synthetic response `ȳ + (yₜ − ȳ)ηₜ`.
pub fn pwb_response(y: &[f64], eta: &[f64]) -> Vec<f64> {
    let y_mean = mean(y);
    y.iter().zip(eta).map(|(v, e)| y_mean + (v - y_mean) * e).collect()
}

/// One DWB replicate statistic.
pub fn dwb_replicate(s: &Sample, eta: &MultiplierDraw, weights: &[f64], kind: StatKind) -> Result<f64> {
    Ok(DwbKernel::new(s, weights, kind)?.replicate(eta))
}

/// One PWB replicate statistic.
pub fn pwb_replicate(s: &Sample, eta: &MultiplierDraw, weights: &[f64], kind: StatKind) -> Result<f64> {
    Ok(PwbKernel::new(s, weights, kind)?.replicate(eta))
}

/// Share of replicates at or above the observed value.
pub fn bootstrap_pvalue(observed: f64, replicates: &[f64]) -> f64 {
    assert!(!replicates.is_empty(), "need at least one replicate");
    let hits = replicates.iter().filter(|r| **r >= observed).count();
    hits as f64 / replicates.len() as f64
}

enum Replicator<'a> {
    Dwb(DwbKernel),
    Pwb(PwbKernel),
    /// PWB with weights recomputed per synthetic response.
    PwbRefit {
        sample: &'a Sample,
        scheme: WeightScheme,
        kind: StatKind,
    },
}

impl Replicator<'_> {
    fn replicate(&self, eta: &MultiplierDraw) -> Result<f64> {
        match self {
            Replicator::Dwb(k) => Ok(k.replicate(eta)),
            Replicator::Pwb(k) => Ok(k.replicate(eta)),
            Replicator::PwbRefit { sample, scheme, kind } => {
                let star = sample.with_response(pwb_response(sample.y(), &eta.eta))?;
                let fit = fit_marginal(&star)?;
                let w = compute_weights(&star, &fit, *scheme)?;
                Ok(compute_statistic(&fit, &w, *kind)?.value)
            }
        }
    }
}

/// Standardize, compute the observed statistic, and bootstrap its null
/// distribution.
///
/// Replicate `j` draws its multipliers from the stream addressed by
/// `(master_seed, j)`, and replicate values are stored by index, so the
/// result is identical for any number of worker threads.
pub fn run_test(s: &Sample, cfg: &BootstrapConfig) -> Result<TestResult> {
    cfg.validate(s.n())?;
    let z = standardize(s)?;
    let fit = fit_marginal(&z)?;
    let weights = compute_weights(&z, &fit, cfg.weight_scheme)?;
    let mut observed = compute_statistic(&fit, &weights, cfg.statistic_kind)?;
    observed.weight_scheme = Some(cfg.weight_scheme);

    let replicator = match (cfg.method, cfg.recompute_weights) {
        (Method::Dwb, _) => Replicator::Dwb(DwbKernel::new(&z, &weights, cfg.statistic_kind)?),
        (Method::Pwb, false) => Replicator::Pwb(PwbKernel::new(&z, &weights, cfg.statistic_kind)?),
        (Method::Pwb, true) => Replicator::PwbRefit {
            sample: &z,
            scheme: cfg.weight_scheme,
            kind: cfg.statistic_kind,
        },
    };
    let part = make_blocks(z.n(), cfg.block_size)?;
    let replicate_values = (0..cfg.replicates)
        .into_par_iter()
        .map(|j| {
            let mut stream = rng::stream(cfg.master_seed, &[j as u64]);
            replicator.replicate(&draw_multipliers(&part, &mut stream))
        })
        .collect::<Result<Vec<f64>>>()?;

    let p_value = bootstrap_pvalue(observed.value, &replicate_values);
    Ok(TestResult {
        observed,
        replicate_values,
        p_value,
        reject: p_value < cfg.alpha,
        config_echo: cfg.clone(),
    })
}
