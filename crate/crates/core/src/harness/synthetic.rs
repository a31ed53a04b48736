//! Seeded synthetic problems: Gaussian families for the oracle path and
//! regression tasks with a relevance knob.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::oracle::{GaussianDist, GaussianFamily};
use crate::random::{RngState, Stream};
use crate::reweight::TaskWeights;
use crate::tasks::{Dataset, GaussianTaskSpec};

fn default_spread() -> f64 {
    4.0
}

fn default_true() -> bool {
    true
}

fn default_target_grid() -> f64 {
    0.05
}

/// Random family with centers `θ_k ~ N(0, spread² I)`, one shared covariance
/// and `p* = N(Σ_k α*_k θ_k / K, Σ / K)` for a planted lattice point `α*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFamilyGen {
    pub dim: usize,
    pub k: usize,
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// `Σ = I` when true, otherwise a random rotation of eigenvalues drawn
    /// from `[0.5, 1.5)`.
    #[serde(default = "default_true")]
    pub isotropic: bool,
    /// `α*` is drawn from the simplex lattice of this resolution.
    #[serde(default = "default_target_grid")]
    pub target_grid: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GaussianFamilyGen {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(ArmlError::validation("dim", "must be >= 1"));
        }
        if self.k == 0 {
            return Err(ArmlError::validation("k", "must be >= 1"));
        }
        if self.k > self.dim + 1 {
            return Err(ArmlError::validation(
                "k",
                format!("at most dim + 1 = {} tasks keep the weights identifiable", self.dim + 1),
            ));
        }
        if !(self.spread > 0.0) {
            return Err(ArmlError::validation("spread", "must be > 0"));
        }
        let m = (1.0 / self.target_grid).round();
        if !(self.target_grid > 0.0 && self.target_grid <= 1.0) || (m * self.target_grid - 1.0).abs() > 1e-9 {
            return Err(ArmlError::validation("target_grid", "must be 1/m for an integer m >= 1"));
        }
        Ok(())
    }
}

/// A generated family together with the planted weights.
#[derive(Clone, Debug)]
pub struct PlantedFamily {
    pub family: GaussianFamily,
    pub alpha_star: TaskWeights,
}

pub fn generate_gaussian_family(gen: &GaussianFamilyGen) -> Result<PlantedFamily> {
    gen.validate()?;
    let mut rng = RngState::for_stream(gen.seed, Stream::Data);
    let d = gen.dim;
    let sigma = if gen.isotropic {
        DMatrix::identity(d, d)
    } else {
        let a = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
        let q = a.qr().q();
        let eig = DVector::from_fn(d, |_, _| 0.5 + rng.uniform());
        let s = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        (&s + s.transpose()) * 0.5
    };
    let centers: Vec<Vec<f64>> = (0..gen.k)
        .map(|_| rng.gaussian_vector(d, 0.0, gen.spread))
        .collect::<Result<_>>()?;

    // uniform draw from the compositions of m into k parts (stars and bars)
    let m = (1.0 / gen.target_grid).round() as usize;
    let mut bars: Vec<usize> = rand::seq::index::sample(&mut rng, m + gen.k - 1, gen.k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(gen.k);
    let mut prev = 0usize;
    for &b in &bars {
        parts.push(b - prev);
        prev = b + 1;
    }
    parts.push(m + gen.k - 1 - prev);
    let k = gen.k as f64;
    let mut alpha: Vec<f64> = parts.iter().map(|&p| p as f64 * k / m as f64).collect();
    let drift = k - alpha.iter().sum::<f64>();
    if let Some(i) = alpha.iter().rposition(|&a| a > 0.0) {
        alpha[i] += drift;
    }
    let alpha_star = TaskWeights::new(alpha)?;

    let mut mean = DVector::zeros(d);
    for (a, c) in alpha_star.as_slice().iter().zip(&centers) {
        mean.axpy(*a / k, &DVector::from_column_slice(c), 1.0);
    }
    let specs = centers
        .into_iter()
        .map(|c| GaussianTaskSpec::new(c, sigma.clone()))
        .collect();
    let p_star = GaussianDist::new(mean.iter().copied().collect(), &sigma / k)?;
    Ok(PlantedFamily {
        family: GaussianFamily::new(specs, p_star)?,
        alpha_star,
    })
}

/// The main task of a Gaussian problem: `n` observations
/// `x_i ~ N(μ*, s Σ)` turned into the likelihood `N(θ | x̄, s Σ / n)`.
///
/// Observations are drawn in sequence, so a smaller `n` with the same seed
/// sees a prefix of the larger sample.
pub fn gaussian_main_task(
    family: &GaussianFamily,
    n: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<GaussianTaskSpec> {
    if n == 0 {
        return Err(ArmlError::arg("main task needs n >= 1"));
    }
    if !(noise_scale > 0.0) {
        return Err(ArmlError::arg("noise scale must be > 0"));
    }
    let d = family.dim();
    let cov = family.sigma() * noise_scale;
    let l = cov.clone().cholesky().ok_or_else(|| ArmlError::arg("main covariance is not SPD"))?.l();
    let mut rng = RngState::for_stream(seed, Stream::MainData);
    let mut sum = DVector::zeros(d);
    for _ in 0..n {
        let z = DVector::from_vec(rng.gaussian_vector(d, 0.0, 1.0)?);
        sum += family.p_star().mean() + &l * z;
    }
    let mean = sum / n as f64;
    Ok(GaussianTaskSpec::new(mean.iter().copied().collect(), cov / n as f64))
}

fn default_noise_std() -> f64 {
    0.5
}

/// Regression tasks sharing one planted predictor `f`.
///
/// The main task and every auxiliary task draw fresh inputs `x ~ N(0, I)`.
/// Auxiliary targets are `ρ f(x) + sqrt(1 - ρ²) s z + noise` with `z`
/// independent standard normal and `s` the scale of `f`, so `ρ = 1` gives the
/// main-task distribution and `ρ = 0` labels independent of the inputs.
/// With `hidden` empty `f` is linear, otherwise a tanh network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionGen {
    pub input_dim: usize,
    pub n_main: usize,
    pub n_aux: usize,
    pub n_val: usize,
    pub relevance: Vec<f64>,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl RegressionGen {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(ArmlError::validation("input_dim", "must be >= 1"));
        }
        for (field, v) in [("n_main", self.n_main), ("n_aux", self.n_aux), ("n_val", self.n_val)] {
            if v == 0 {
                return Err(ArmlError::validation(field, "must be >= 1"));
            }
        }
        if self.relevance.is_empty() {
            return Err(ArmlError::validation("relevance", "needs one entry per auxiliary task"));
        }
        if let Some(r) = self.relevance.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(ArmlError::validation("relevance", format!("{r} outside [0, 1]")));
        }
        if !(self.noise_std > 0.0) {
            return Err(ArmlError::validation("noise_std", "must be > 0"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(ArmlError::validation("hidden", "layer sizes must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RegressionData {
    pub main: Dataset,
    pub aux: Vec<Dataset>,
    pub validation: Dataset,
}

struct Teacher {
    layers: Vec<(DMatrix<f64>, DVector<f64>)>,
    head: DVector<f64>,
}

impl Teacher {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let mut h = x.clone();
        for (w, b) in &self.layers {
            h = (w * h + b).map(f64::tanh);
        }
        self.head.dot(&h)
    }
}

pub fn generate_regression(gen: &RegressionGen) -> Result<RegressionData> {
    gen.validate()?;
    let mut rng = RngState::for_stream(gen.seed, Stream::Data);
    let mut fan_in = gen.input_dim;
    let mut layers = Vec::new();
    for &h in &gen.hidden {
        let s = 1.0 / (fan_in as f64).sqrt();
        let w = DMatrix::from_fn(h, fan_in, |_, _| rng.standard_normal() * s * 2.0);
        let b = DVector::from_fn(h, |_, _| rng.standard_normal() * 0.1);
        layers.push((w, b));
        fan_in = h;
    }
    let head = DVector::from_vec(rng.gaussian_vector(fan_in, 0.0, 1.0)?);
    let teacher = Teacher { layers, head };

    let sample = |n: usize, rho: f64, rng: &mut RngState| -> Result<Dataset> {
        let mut rows = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let scale = teacher.head.norm();
        let mix = (1.0 - rho * rho).max(0.0).sqrt();
        for _ in 0..n {
            let x = rng.gaussian_vector(gen.input_dim, 0.0, 1.0)?;
            let f = teacher.eval(&DVector::from_column_slice(&x));
            let z = rng.standard_normal();
            let e = rng.standard_normal() * gen.noise_std;
            ys.push(rho * f + mix * scale * z + e);
            rows.push(x);
        }
        Dataset::from_rows(&rows, &ys)
    };
    let main = sample(gen.n_main, 1.0, &mut rng)?;
    let validation = sample(gen.n_val, 1.0, &mut rng)?;
    let aux = gen
        .relevance
        .iter()
        .map(|&rho| sample(gen.n_aux, rho, &mut rng))
        .collect::<Result<_>>()?;
    Ok(RegressionData { main, aux, validation })
}
