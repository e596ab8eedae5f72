//! Weight vectors for the max/ave statistics: unit, least-squares standard
//! error, and Bartlett-kernel HAC standard error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::dot;
use crate::marginal::MarginalFit;
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum WeightScheme {
    #[default]
    Unit,
    LsSe,
    HacSe {
        hac_bandwidth: usize,
    },
}

impl WeightScheme {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            WeightScheme::HacSe { hac_bandwidth } if hac_bandwidth < 1 || hac_bandwidth >= n => {
                Err(Error::InvalidBandwidth {
                    n,
                    bandwidth: hac_bandwidth,
                })
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightScheme::Unit => "unit",
            WeightScheme::LsSe => "ls",
            WeightScheme::HacSe { .. } => "hac",
        }
    }
}

/// `⌈1.2 n^{1/3}⌉`, clamped into `1..n`.
pub fn default_hac_bandwidth(n: usize) -> usize {
    let bw = (1.2 * (n as f64).cbrt()).ceil() as usize;
    bw.clamp(1, n.saturating_sub(1).max(1))
}

pub fn unit_weights(p: usize) -> Vec<f64> {
    vec![1.0; p]
}

fn check_fit(s: &Sample, fit: &MarginalFit) -> Result<()> {
    if fit.n != s.n() || fit.p != s.p() {
        return Err(Error::Shape("fit does not belong to this sample".into()));
    }
    Ok(())
}

/// Standard error of `√n φ̂ᵢ` under iid homoscedastic errors.
pub fn ls_se(s: &Sample, fit: &MarginalFit) -> Result<Vec<f64>> {
    check_fit(s, fit)?;
    let n = s.n() as f64;
    let tss: f64 = s.y().iter().map(|v| (v - fit.y_mean).powi(2)).sum();
    (0..fit.p)
        .map(|i| {
            let r = fit.resid(i);
            let rss = dot(r, r);
            // residuals of an exact fit are rounding noise, not zero
            if !(rss > 1e-24 * tss) {
                return Err(Error::ZeroResidualVariance(i + 1));
            }
            Ok(((rss / n) / (fit.x_centered_ss[i] / n)).sqrt())
        })
        .collect()
}

/// Bartlett-weighted long-run variance `γ(0) + 2∑ₗ (1 − l/(bw+1)) γ(l)`
/// with autocovariances on divisor `n`.
pub(crate) fn bartlett_lrv(w: &[f64], bandwidth: usize) -> f64 {
    let n = w.len();
    let gamma = |l: usize| dot(&w[l..], &w[..n - l]) / n as f64;
    let mut omega = gamma(0);
    for l in 1..=bandwidth.min(n - 1) {
        omega += 2.0 * (1.0 - l as f64 / (bandwidth as f64 + 1.0)) * gamma(l);
    }
    omega
}

/// HAC standard error of `√n φ̂ᵢ` with a Bartlett kernel.
pub fn hac_se(s: &Sample, fit: &MarginalFit, bandwidth: usize) -> Result<Vec<f64>> {
    check_fit(s, fit)?;
    let n = s.n();
    if bandwidth < 1 || bandwidth >= n {
        return Err(Error::InvalidBandwidth { n, bandwidth });
    }
    let mut w = vec![0.0; n];
    (0..fit.p)
        .map(|i| {
            let xm = fit.x_mean[i];
            for ((wt, xt), vt) in w.iter_mut().zip(s.column(i)).zip(fit.resid(i)) {
                *wt = (xt - xm) * vt;
            }
            let omega = bartlett_lrv(&w, bandwidth);
            if !(omega > 0.0) {
                return Err(Error::NonPositiveVariance(i + 1));
            }
            let sxx = fit.x_centered_ss[i] / n as f64;
            Ok((omega / (sxx * sxx)).sqrt())
        })
        .collect()
}

/// Weight vector for a scheme: ones, or reciprocal standard errors.
pub fn compute_weights(s: &Sample, fit: &MarginalFit, scheme: WeightScheme) -> Result<Vec<f64>> {
    scheme.validate(s.n())?;
    let se = match scheme {
        WeightScheme::Unit => return Ok(unit_weights(fit.p)),
        WeightScheme::LsSe => ls_se(s, fit)?,
        WeightScheme::HacSe { hac_bandwidth } => hac_se(s, fit, hac_bandwidth)?,
    };
    Ok(reciprocal(&se))
}

fn reciprocal(se: &[f64]) -> Vec<f64> {
    se.iter().map(|v| 1.0 / v).collect()
}
