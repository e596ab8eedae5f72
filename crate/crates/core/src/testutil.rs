//! Random fixtures and textbook oracles for unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::sample::Sample;

/// Gaussian sample with some signal in the first predictor and random
/// location/scale per column.
pub(crate) fn random_sample<R: Rng>(
    rng: &mut R,
    n: std::ops::RangeInclusive<usize>,
    p: std::ops::RangeInclusive<usize>,
) -> Sample {
    let n = rng.random_range(n);
    let p = rng.random_range(p);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let loc: f64 = rng.random_range(-3.0..3.0);
            let scale: f64 = rng.random_range(0.2..4.0);
            (0..n)
                .map(|_| loc + scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let y = (0..n)
        .map(|t| 1.5 + 0.4 * cols[0][t] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    Sample::new(y, cols).unwrap()
}

/// Two-pass covariance over variance with naive summation.
pub(crate) fn two_pass_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for t in 0..x.len() {
        mx += x[t];
        my += y[t];
    }
    mx /= n;
    my /= n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for t in 0..x.len() {
        sxy += (x[t] - mx) * (y[t] - my);
        sxx += (x[t] - mx) * (x[t] - mx);
    }
    sxy / sxx
}
