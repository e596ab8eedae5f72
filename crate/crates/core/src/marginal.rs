//! Bivariate marginal regressions and the weighted max/ave statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{dot, mean};
use crate::sample::Sample;
use crate::weights::WeightScheme;

/// Result of regressing the response on each predictor separately.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFit {
    pub n: usize,
    pub p: usize,
    /// Slope of predictor `i`.
    pub phi: Vec<f64>,
    /// Intercept of predictor `i`.
    pub delta: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
    /// `∑ₜ (x_{i,t} − x̄ᵢ)²`.
    pub x_centered_ss: Vec<f64>,
    /// Residuals, column-major `n × p`.
    pub resid: Vec<f64>,
}

impl MarginalFit {
    /// Residual column for predictor `i` (0-based).
    pub fn resid(&self, i: usize) -> &[f64] {
        &self.resid[i * self.n..(i + 1) * self.n]
    }
}

struct ColumnFit {
    phi: f64,
    delta: f64,
    x_mean: f64,
    ss: f64,
    resid: Vec<f64>,
}

fn fit_column(x: &[f64], y: &[f64], y_mean: f64, yc: &[f64]) -> Option<ColumnFit> {
    let x_mean = mean(x);
    let xc: Vec<f64> = x.iter().map(|v| v - x_mean).collect();
    let ss = dot(&xc, &xc);
    if !(ss > 0.0) {
        return None;
    }
    let phi = dot(&xc, yc) / ss;
    let delta = y_mean - phi * x_mean;
    let resid = x.iter().zip(y).map(|(xt, yt)| yt - delta - phi * xt).collect();
    Some(ColumnFit {
        phi,
        delta,
        x_mean,
        ss,
        resid,
    })
}

/// Least-squares fit of `yₜ = δᵢ + φᵢ x_{i,t} + vᵢ,ₜ` for every predictor.
///
/// Columns are fitted in parallel; each column's sums run in a fixed order,
/// so the result does not depend on the worker count.
pub fn fit_marginal(s: &Sample) -> Result<MarginalFit> {
    let n = s.n();
    let y = s.y();
    let y_mean = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let cols: Vec<Option<ColumnFit>> = (0..s.p())
        .into_par_iter()
        .map(|i| fit_column(s.column(i), y, y_mean, &yc))
        .collect();

    let mut fit = MarginalFit {
        n,
        p: s.p(),
        phi: Vec::with_capacity(s.p()),
        delta: Vec::with_capacity(s.p()),
        x_mean: Vec::with_capacity(s.p()),
        y_mean,
        x_centered_ss: Vec::with_capacity(s.p()),
        resid: Vec::with_capacity(n * s.p()),
    };
    for (i, c) in cols.into_iter().enumerate() {
        let c = c.ok_or(Error::DegenerateColumn(i + 1))?;
        fit.phi.push(c.phi);
        fit.delta.push(c.delta);
        fit.x_mean.push(c.x_mean);
        fit.x_centered_ss.push(c.ss);
        fit.resid.extend_from_slice(&c.resid);
    }
    Ok(fit)
}

/// `√n φ̂ᵢ / seᵢ` for every predictor.
pub fn t_statistics(fit: &MarginalFit, se: &[f64]) -> Result<Vec<f64>> {
    if se.len() != fit.p {
        return Err(Error::Shape(format!("expected {} standard errors", fit.p)));
    }
    let root_n = (fit.n as f64).sqrt();
    fit.phi
        .iter()
        .zip(se)
        .enumerate()
        .map(|(i, (phi, se))| {
            if *se > 0.0 {
                Ok(root_n * phi / se)
            } else {
                Err(Error::NonPositiveSe(i + 1))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    #[default]
    Max,
    Ave,
}

impl StatKind {
    /// Reduce per-predictor magnitudes to the statistic.
    pub fn reduce(self, per_index: &[f64]) -> f64 {
        match self {
            StatKind::Max => per_index.iter().copied().fold(0.0, f64::max),
            StatKind::Ave => per_index.iter().sum(),
        }
    }
}

/// An observed max- or ave-statistic with its per-predictor pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticValue {
    pub kind: StatKind,
    pub weight_scheme: Option<WeightScheme>,
    pub value: f64,
    /// 1-based index of the largest entry of `per_index`, smallest on ties.
    pub argmax_index: usize,
    /// `|𝒲ᵢ √n φ̂ᵢ|`.
    pub per_index: Vec<f64>,
}

/// First index attaining the maximum, 0-based.
pub(crate) fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, a) in v.iter().enumerate() {
        if *a > v[best] {
            best = i;
        }
    }
    best
}

/// Weighted max- or ave-statistic over the marginal slopes.
pub fn compute_statistic(fit: &MarginalFit, weights: &[f64], kind: StatKind) -> Result<StatisticValue> {
    if weights.len() != fit.p {
        return Err(Error::Shape(format!("expected {} weights", fit.p)));
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::NonPositiveWeight(i + 1));
    }
    let root_n = (fit.n as f64).sqrt();
    let per_index: Vec<f64> = fit
        .phi
        .iter()
        .zip(weights)
        .map(|(phi, w)| w * root_n * phi.abs())
        .collect();
    Ok(StatisticValue {
        kind,
        weight_scheme: None,
        value: kind.reduce(&per_index),
        argmax_index: argmax_first(&per_index) + 1,
        per_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::standardize;
    use crate::testutil::{random_sample, two_pass_slope};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn fit_from_phi(n: usize, phi: Vec<f64>) -> MarginalFit {
        let p = phi.len();
        MarginalFit {
            n,
            p,
            phi,
            delta: vec![0.0; p],
            x_mean: vec![0.0; p],
            y_mean: 0.0,
            x_centered_ss: vec![1.0; p],
            resid: vec![0.0; n * p],
        }
    }

    #[test]
    fn perfect_fit() {
        let x = vec![1.0, 3.0, 2.0, 7.0, -1.0];
        let s = Sample::new(x.clone(), vec![x, vec![0.0, 1.0, 0.0, 2.0, 5.0]]).unwrap();
        let f = fit_marginal(&s).unwrap();
        assert!((f.phi[0] - 1.0).abs() < 1e-15);
        assert!(f.resid(0).iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn constant_column_errors() {
        let s = Sample::new(vec![0.3, -1.0, 2.0], vec![vec![1.0, 2.0, 3.0], vec![2.0; 3]]).unwrap();
        assert_eq!(fit_marginal(&s), Err(Error::DegenerateColumn(2)));
    }

    #[test]
    fn slopes_match_two_pass_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = random_sample(&mut rng, 3..=50, 1..=20);
            let f = fit_marginal(&s).unwrap();
            for i in 0..s.p() {
                let want = two_pass_slope(s.column(i), s.y());
                assert!((f.phi[i] - want).abs() < 1e-10 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn t_statistic_examples() {
        let f = fit_from_phi(4, vec![0.5]);
        assert_eq!(t_statistics(&f, &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(t_statistics(&f, &[0.0]), Err(Error::NonPositiveSe(1)));
        let f = fit_from_phi(9, vec![0.5, -1.0]);
        assert_eq!(t_statistics(&f, &[1.0, 1.0]).unwrap(), vec![1.5, -3.0]);
    }

    #[test]
    fn statistic_examples() {
        let f = fit_from_phi(4, vec![0.5, -2.0, 1.0]);
        let w = [1.0; 3];
        let m = compute_statistic(&f, &w, StatKind::Max).unwrap();
        assert_eq!((m.value, m.argmax_index), (4.0, 2));
        assert_eq!(compute_statistic(&f, &w, StatKind::Ave).unwrap().value, 7.0);
        let z = fit_from_phi(4, vec![0.0; 3]);
        assert_eq!(compute_statistic(&z, &w, StatKind::Max).unwrap().value, 0.0);
        assert_eq!(compute_statistic(&z, &w, StatKind::Ave).unwrap().value, 0.0);
        assert_eq!(
            compute_statistic(&f, &[1.0, 0.0, 1.0], StatKind::Max),
            Err(Error::NonPositiveWeight(2))
        );
        let tie = fit_from_phi(4, vec![1.0, -1.0]);
        assert_eq!(
            compute_statistic(&tie, &[1.0; 2], StatKind::Max).unwrap().argmax_index,
            1
        );
    }

    proptest! {
        #[test]
        fn normal_equations_and_correlation(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = random_sample(&mut rng, 5..=40, 1..=6);
            let f = fit_marginal(&s).unwrap();
            for i in 0..s.p() {
                let xm = f.x_mean[i];
                let r = f.resid(i);
                let scale = s.y().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
                prop_assert!(r.iter().sum::<f64>().abs() < 1e-8 * scale);
                let ortho: f64 = r.iter().zip(s.column(i)).map(|(v, x)| v * (x - xm)).sum();
                prop_assert!(ortho.abs() < 1e-8 * scale);
                prop_assert!(f.x_centered_ss[i] > 0.0);
            }
            let z = standardize(&s).unwrap();
            let fz = fit_marginal(&z).unwrap();
            for i in 0..s.p() {
                let c: f64 = z.column(i).iter().zip(z.y()).map(|(a, b)| a * b).sum::<f64>() / z.n() as f64;
                prop_assert!((fz.phi[i] - c).abs() < 1e-10);
            }
        }

        #[test]
        fn sign_flip_and_affine_invariance(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = random_sample(&mut rng, 5..=40, 2..=6);
            let w = vec![1.0; s.p()];
            let base = compute_statistic(&fit_marginal(&standardize(&s).unwrap()).unwrap(), &w, StatKind::Max).unwrap();

            let mut cols: Vec<Vec<f64>> = s.columns().map(<[f64]>::to_vec).collect();
            cols[0].iter_mut().for_each(|v| *v = -*v);
            let flipped = Sample::new(s.y().to_vec(), cols).unwrap();
            let ff = fit_marginal(&flipped).unwrap();
            let f0 = fit_marginal(&s).unwrap();
            prop_assert!((ff.phi[0] + f0.phi[0]).abs() < 1e-10 * f0.phi[0].abs().max(1.0));
            let fl = compute_statistic(&fit_marginal(&standardize(&flipped).unwrap()).unwrap(), &w, StatKind::Max).unwrap();
            prop_assert!((fl.value - base.value).abs() < 1e-8);

            let moved = s.with_response(s.y().iter().map(|v| a * v + b).collect()).unwrap();
            let mv = compute_statistic(&fit_marginal(&standardize(&moved).unwrap()).unwrap(), &w, StatKind::Max).unwrap();
            prop_assert!((mv.value - base.value).abs() < 1e-8);
            for (x, y) in mv.per_index.iter().zip(&base.per_index) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }

        #[test]
        fn max_not_above_ave(phi in prop::collection::vec(-3.0f64..3.0, 1..30)) {
            let f = fit_from_phi(16, phi);
            let w = vec![1.0; f.p];
            let m = compute_statistic(&f, &w, StatKind::Max).unwrap();
            let a = compute_statistic(&f, &w, StatKind::Ave).unwrap();
            prop_assert!(m.value <= a.value + 1e-12);
            prop_assert_eq!(m.per_index[m.argmax_index - 1], m.value);
            let nonzero = m.per_index.iter().filter(|v| **v != 0.0).count();
            prop_assert_eq!(m.value == a.value, nonzero <= 1);
        }
    }
}
