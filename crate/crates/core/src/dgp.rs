//! Simulated processes for the Monte Carlo study.
//!
//! A draw simulates `n + burn_in` time points of errors, covariates and
//! response, keeps the last `n`, and hands the tests the augmented predictor
//! set `[yₜ₋₁, xₜ′]′`.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::sample::Sample;

pub const DEFAULT_BURN_IN: usize = 500;

/// GARCH(1,1) coefficients: `σₜ² = ω + a·vₜ₋₁² + g·σₜ₋₁²`.
const GARCH_OMEGA: f64 = 1.0;
const GARCH_ARCH: f64 = 0.3;
const GARCH_GARCH: f64 = 0.5;
/// AR coefficient of the latent covariate factors under C2.
const C2_AR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    /// Null: `yₜ = vₜ`.
    I,
    /// One relevant covariate: `yₜ = φ₁x₁,ₜ + vₜ`.
    Ii { phi1: f64 },
    /// Ten relevant covariates plus AR feedback.
    Iii { varphi: f64 },
    /// Pure AR: `yₜ = ϕyₜ₋₁ + vₜ`.
    Iv { varphi: f64 },
    /// Weak dense signal over the first two thirds of the covariates.
    V { varphi: f64 },
    /// Local alternative `φᵢ = cᵢ (ln p̃)² / √n` with `p̃ = p + 1`.
    Local { c: Vec<f64> },
}

impl Model {
    /// Short label used in report keys, e.g. `ii(0.25)`.
    pub fn label(&self) -> String {
        match self {
            Model::I => "i".into(),
            Model::Ii { phi1 } => format!("ii({phi1})"),
            Model::Iii { varphi } => format!("iii({varphi})"),
            Model::Iv { varphi } => format!("iv({varphi})"),
            Model::V { varphi } => format!("v({varphi})"),
            Model::Local { c } => format!(
                "local({})",
                c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
            ),
        }
    }

    fn ar_coefficient(&self) -> f64 {
        match self {
            Model::Iii { varphi } | Model::Iv { varphi } => *varphi,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    /// iid standard normal.
    #[default]
    E1,
    /// GARCH(1,1) with standard normal innovations.
    E2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cov", rename_all = "lowercase")]
pub enum CovariateLaw {
    /// Serially independent, equicorrelated normals.
    C1 { gamma: f64 },
    /// Loadings on AR(1) factors plus independent noise.
    C2,
}

impl Default for CovariateLaw {
    fn default() -> Self {
        CovariateLaw::C1 { gamma: 0.0 }
    }
}

impl CovariateLaw {
    pub fn label(&self) -> &'static str {
        match self {
            CovariateLaw::C1 { .. } => "c1",
            CovariateLaw::C2 => "c2",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            CovariateLaw::C1 { gamma } => Some(*gamma),
            CovariateLaw::C2 => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n: usize,
    /// Number of covariates before the lagged response is prepended.
    pub p: usize,
    pub model: Model,
    pub error: ErrorLaw,
    pub covariate: CovariateLaw,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl DgpSpec {
    pub fn new(n: usize, p: usize, model: Model, error: ErrorLaw, covariate: CovariateLaw, seed: u64) -> Self {
        Self {
            n,
            p,
            model,
            error,
            covariate,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    /// Simulated length including burn-in.
    pub fn total_len(&self) -> usize {
        self.n + self.burn_in
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidConfig(format!("n = {} is below 3", self.n)));
        }
        if self.p < 1 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        if let CovariateLaw::C1 { gamma } = self.covariate {
            if !(0.0..1.0).contains(&gamma) {
                return Err(Error::InvalidConfig(format!("gamma {gamma} not in [0, 1)")));
            }
        }
        let ar = self.model.ar_coefficient();
        if !(ar.abs() < 1.0) {
            return Err(Error::UnstableAr(ar));
        }
        if let Model::Local { c } = &self.model {
            if c.len() > self.p {
                return Err(Error::InvalidConfig(format!(
                    "local alternative has {} coefficients for p = {}",
                    c.len(),
                    self.p
                )));
            }
        }
        Ok(())
    }
}

/// GARCH(1,1) errors driven by the given innovations, `σ₁² = 1`.
pub fn garch_from_innovations(eps: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(eps.len());
    let mut sigma2 = 1.0;
    for (t, e) in eps.iter().enumerate() {
        if t > 0 {
            let prev: f64 = v[t - 1];
            sigma2 = GARCH_OMEGA + GARCH_ARCH * prev * prev + GARCH_GARCH * sigma2;
        }
        v.push(sigma2.sqrt() * e);
    }
    v
}

/// Response errors over the full simulated length.
pub fn gen_errors<R: Rng + ?Sized>(spec: &DgpSpec, stream: &mut R) -> Vec<f64> {
    let eps: Vec<f64> = (0..spec.total_len()).map(|_| stream.sample(StandardNormal)).collect();
    match spec.error {
        ErrorLaw::E1 => eps,
        ErrorLaw::E2 => garch_from_innovations(&eps),
    }
}

/// Covariates over the full simulated length, column-major
/// `(n + burn_in) × p`.
pub fn gen_covariates<R: Rng + ?Sized>(spec: &DgpSpec, stream: &mut R) -> Vec<f64> {
    let len = spec.total_len();
    let p = spec.p;
    let mut normals = |k: usize| -> Vec<f64> { (0..k).map(|_| stream.sample(StandardNormal)).collect() };
    match spec.covariate {
        CovariateLaw::C1 { gamma } => {
            // one common factor gives exact equicorrelation γ
            let common = normals(len);
            let mut x = normals(len * p);
            let (a, b) = (gamma.sqrt(), (1.0 - gamma).sqrt());
            for col in x.chunks_exact_mut(len) {
                for (v, z0) in col.iter_mut().zip(&common) {
                    *v = a * z0 + b * *v;
                }
            }
            x
        }
        CovariateLaw::C2 => {
            let loadings: Vec<f64> = {
                let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
                (0..p * p).map(|_| stream.sample(u)).collect()
            };
            let mut normals = |k: usize| -> Vec<f64> { (0..k).map(|_| stream.sample(StandardNormal)).collect() };
            let mut w = normals(len * p);
            let stationary_sd = (1.0 / (1.0 - C2_AR * C2_AR)).sqrt();
            for col in w.chunks_exact_mut(len) {
                col[0] *= stationary_sd;
                for t in 1..len {
                    col[t] += C2_AR * col[t - 1];
                }
            }
            // x_i = ∑_j A_ij w_j + v_x,i
            let mut x = normals(len * p);
            for (i, xi) in x.chunks_exact_mut(len).enumerate() {
                for (j, wj) in w.chunks_exact(len).enumerate() {
                    let a = loadings[i * p + j];
                    for (xv, wv) in xi.iter_mut().zip(wj) {
                        *xv += a * wv;
                    }
                }
            }
            x
        }
    }
}

/// Slope coefficients on `x` implied by the model (length `p`).
pub fn coefficients(spec: &DgpSpec) -> Vec<f64> {
    let p = spec.p;
    let mut phi = vec![0.0; p];
    match &spec.model {
        Model::I | Model::Iv { .. } => {}
        Model::Ii { phi1 } => phi[0] = *phi1,
        Model::Iii { .. } => {
            for (i, v) in phi.iter_mut().enumerate().take(10) {
                *v = if i < 5 { 0.15 } else { -0.1 };
            }
        }
        Model::V { varphi } => {
            // the two indicators overlap on the first third
            for (k, v) in phi.iter_mut().enumerate() {
                let i = k + 1;
                let first = if i <= p / 3 { *varphi } else { 0.0 };
                let second = if i <= 2 * p / 3 { varphi / 3.0 } else { 0.0 };
                *v = first - second;
            }
        }
        Model::Local { c } => {
            let scale = ((p + 1) as f64).ln().powi(2) / (spec.n as f64).sqrt();
            for (v, ci) in phi.iter_mut().zip(c) {
                *v = ci * scale;
            }
        }
    }
    phi
}

/// Response over the full simulated length; AR recursions start at `y₀ = 0`.
pub fn gen_response(spec: &DgpSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    let len = spec.total_len();
    if v.len() != len || x.len() != len * spec.p {
        return Err(Error::Shape("errors or covariates have the wrong length".into()));
    }
    let phi = coefficients(spec);
    let ar = spec.model.ar_coefficient();
    let mut y = v.to_vec();
    for (i, coef) in phi.iter().enumerate() {
        if *coef != 0.0 {
            for (yt, xt) in y.iter_mut().zip(&x[i * len..(i + 1) * len]) {
                *yt += coef * xt;
            }
        }
    }
    if ar != 0.0 {
        let mut prev = 0.0;
        for yt in y.iter_mut() {
            *yt += ar * prev;
            prev = *yt;
        }
    }
    Ok(y)
}

/// Simulate one sample with predictors `[yₜ₋₁ | x₁ₜ … x_pₜ]`.
pub fn generate(spec: &DgpSpec) -> Result<Sample> {
    spec.validate()?;
    let v = gen_errors(spec, &mut rng::stream(spec.seed, &[0]));
    let x = gen_covariates(spec, &mut rng::stream(spec.seed, &[1]));
    let y = gen_response(spec, &x, &v)?;
    Ok(assemble(spec, &y, &x))
}

fn assemble(spec: &DgpSpec, y: &[f64], x: &[f64]) -> Sample {
    let (n, p, b) = (spec.n, spec.p, spec.burn_in);
    let len = spec.total_len();
    let mut cols = Vec::with_capacity(n * (p + 1));
    // lag of the first retained point is the last burn-in value (y₀ = 0 if none)
    cols.push(if b == 0 { 0.0 } else { y[b - 1] });
    cols.extend_from_slice(&y[b..len - 1]);
    for i in 0..p {
        cols.extend_from_slice(&x[i * len + b..(i + 1) * len]);
    }
    let mut names = vec!["y".to_string(), "y_lag".to_string()];
    names.extend((1..=p).map(|i| format!("x{i}")));
    Sample::from_col_major(y[b..].to_vec(), cols, p + 1)
        .and_then(|s| s.with_names(names))
        .expect("simulated values are finite")
}

/// Stream for callers that want to drive the generators directly.
pub fn spec_stream(spec: &DgpSpec, part: u64) -> Stream {
    rng::stream(spec.seed, &[part])
}
