//! Dimension-growth exponents and default tuning values.
//!
//! All functions are closed-form arithmetic. `b` is the moment-growth
//! exponent of the data, `lambda` the decay size of the dependence measure,
//! and `rho` the block-size exponent `bₙ ≍ n^ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub b: f64,
    pub lambda: f64,
    pub rho: f64,
}

fn out_of_domain(msg: String) -> Error {
    Error::OutOfDomain(msg)
}

/// Exponent `s(b, λ)` such that `ln p = o(n^s)` keeps the max-statistic's
/// Gaussian approximation valid.
pub fn s_exponent(b: f64, lambda: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) || !(lambda >= 2.0) {
        return Err(out_of_domain(format!(
            "s_exponent needs b > 0 and lambda >= 2, got ({b}, {lambda})"
        )));
    }
    // λ/(8+2λ) is increasing and tends to 1/2 for λ → ∞
    let frac = if lambda.is_infinite() {
        0.5
    } else {
        lambda / (8.0 + 2.0 * lambda)
    };
    let tail = frac / (7.0 / 6.0f64).max(1.0 + b);
    let s = if b <= 1.0 / 6.0 {
        if lambda >= 28.0 / 5.0 {
            0.25
        } else {
            tail
        }
    } else if b < 1.0 {
        if lambda >= 4.0 * (1.0 + b) / (1.0 - b) {
            0.25
        } else {
            tail
        }
    } else {
        frac / (1.0 + b)
    };
    Ok(s)
}

/// Exponent bounding `ln p` for bootstrap validity with block exponent `ρ`.
///
/// On `ρ ≤ 3/13` the bound carries an arbitrarily small `ι > 0`; the value
/// returned is its `ι → 0` limit, which the true exponent stays strictly
/// below.
pub fn boot_dimension_exponent(params: GrowthParams) -> Result<f64> {
    let GrowthParams { b, lambda, rho } = params;
    if !(rho > 0.0 && rho < 1.0 / 3.0) {
        return Err(out_of_domain(format!("rho {rho} not in (0, 1/3)")));
    }
    let s = s_exponent(b, lambda)?;
    let block_part = if rho <= 3.0 / 13.0 {
        (rho + 1.0) / 8.0
    } else {
        0.5 - 1.5 * rho
    };
    Ok(block_part.min(s))
}

/// Largest dimension used in the simulation grid:
/// `⌊20 exp(n^{1/4}) / √(ln n)⌋`.
pub fn pbar(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(out_of_domain(format!("pbar needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok((20.0 * nf.powf(0.25).exp() / nf.ln().sqrt()).floor() as usize)
}

/// `scale · round(n^ρ)`, rounding halves up.
pub fn block_size(n: usize, rho: f64, scale: usize) -> Result<usize> {
    if n < 2 || scale < 1 || !(rho > 0.0 && rho.is_finite()) {
        return Err(out_of_domain(format!(
            "block_size needs n >= 2, rho > 0, scale >= 1, got ({n}, {rho}, {scale})"
        )));
    }
    let r = ((n as f64).powf(rho) + 0.5).floor() as usize;
    Ok(scale * r.max(1))
}

/// Default DWB block size: `5·round(n^{1/6})`, capped at `n`.
pub fn default_block_size(n: usize) -> Result<usize> {
    Ok(block_size(n, 1.0 / 6.0, 5)?.min(n))
}
