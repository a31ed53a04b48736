//! Closed-form Gaussian reference: surrogate prior, divergences and the
//! exhaustive weight oracle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::linalg::cholesky_spd;
use crate::params::ParamVector;
use crate::reweight::TaskWeights;
use crate::tasks::GaussianTaskSpec;

/// Largest K accepted by [`brute_force_optimal_weights`].
pub const MAX_BRUTE_FORCE_K: usize = 4;

#[derive(Clone, Debug)]
pub struct GaussianDist {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl GaussianDist {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(ArmlError::arg(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let chol = cholesky_spd(&covariance)?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(GaussianDist {
            mean: DVector::from_vec(mean),
            precision: chol.inverse(),
            covariance,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn log_det_covariance(&self) -> f64 {
        self.log_det
    }

    /// `∇ log p(x) = -Σ⁻¹ (x - μ)`.
    pub fn score(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(-(&self.precision * (DVector::from_column_slice(x) - &self.mean)))
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let r = DVector::from_column_slice(x) - &self.mean;
        let d = self.dim() as f64;
        Ok(-0.5 * (r.dot(&(&self.precision * &r)) + self.log_det + d * (2.0 * std::f64::consts::PI).ln()))
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        let d = self.dim() as f64;
        0.5 * (d * (1.0 + (2.0 * std::f64::consts::PI).ln()) + self.log_det)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(ArmlError::arg(format!(
                "point of dimension {d} for a {}-dimensional Gaussian",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Serialized form of a [`GaussianFamily`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFamilySpec {
    pub tasks: Vec<GaussianTaskSpec>,
    pub p_star_mean: Vec<f64>,
    pub p_star_covariance: Vec<Vec<f64>>,
}

/// K parameter-space Gaussian tasks sharing one covariance, plus the
/// reference prior `p*`.
#[derive(Clone, Debug)]
pub struct GaussianFamily {
    specs: Vec<GaussianTaskSpec>,
    centers: Vec<DVector<f64>>,
    sigma: DMatrix<f64>,
    p_star: GaussianDist,
}

impl GaussianFamily {
    pub fn new(specs: Vec<GaussianTaskSpec>, p_star: GaussianDist) -> Result<Self> {
        let first = specs
            .first()
            .ok_or_else(|| ArmlError::arg("a Gaussian family needs at least one task"))?;
        let sigma = first.covariance_matrix()?;
        cholesky_spd(&sigma)?;
        let scale = sigma.amax().max(1.0);
        for (k, s) in specs.iter().enumerate() {
            let c = s.covariance_matrix()?;
            if c.shape() != sigma.shape() || (&c - &sigma).amax() > 1e-12 * scale {
                return Err(ArmlError::arg(format!(
                    "task {} does not share the family covariance",
                    k + 1
                )));
            }
        }
        if p_star.dim() != first.dim() {
            return Err(ArmlError::arg("p* dimension does not match the tasks"));
        }
        let centers = specs.iter().map(|s| DVector::from_column_slice(&s.center)).collect();
        Ok(GaussianFamily {
            specs,
            centers,
            sigma,
            p_star,
        })
    }

    pub fn from_spec(spec: &GaussianFamilySpec) -> Result<Self> {
        let d = spec.p_star_mean.len();
        let cov = GaussianTaskSpec {
            center: spec.p_star_mean.clone(),
            covariance: spec.p_star_covariance.clone(),
        }
        .covariance_matrix()?;
        debug_assert_eq!(cov.nrows(), d);
        Self::new(spec.tasks.clone(), GaussianDist::new(spec.p_star_mean.clone(), cov)?)
    }

    pub fn to_spec(&self) -> GaussianFamilySpec {
        let c = self.p_star.covariance();
        GaussianFamilySpec {
            tasks: self.specs.clone(),
            p_star_mean: self.p_star.mean().iter().copied().collect(),
            p_star_covariance: (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.specs.len()
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn specs(&self) -> &[GaussianTaskSpec] {
        &self.specs
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn p_star(&self) -> &GaussianDist {
        &self.p_star
    }

    fn check_weights(&self, alpha: &TaskWeights) -> Result<()> {
        if alpha.k() != self.k() {
            return Err(ArmlError::arg(format!(
                "{} weights for a family of {} tasks",
                alpha.k(),
                self.k()
            )));
        }
        Ok(())
    }
}

/// `p_α = N(Σ_k α_k θ_k / K, Σ / K)`.
pub fn surrogate_prior(family: &GaussianFamily, alpha: &TaskWeights) -> Result<GaussianDist> {
    family.check_weights(alpha)?;
    let k = family.k() as f64;
    let mut mean = DVector::zeros(family.dim());
    for (a, c) in alpha.as_slice().iter().zip(family.centers()) {
        mean.axpy(*a / k, c, 1.0);
    }
    GaussianDist::new(mean.iter().copied().collect(), family.sigma() / k)
}

fn check_pair(p: &GaussianDist, q: &GaussianDist) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(ArmlError::arg(format!(
            "Gaussians of dimension {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(())
}

/// `KL(p ‖ q)` in nats.
pub fn kl_gaussian(p: &GaussianDist, q: &GaussianDist) -> Result<f64> {
    check_pair(p, q)?;
    let diff = q.mean() - p.mean();
    let trace = (q.precision() * p.covariance()).trace();
    let maha = diff.dot(&(q.precision() * &diff));
    let kl = 0.5 * (trace + maha - p.dim() as f64 + q.log_det - p.log_det);
    Ok(kl.max(0.0))
}

/// `E_p ‖∇ log p - ∇ log q‖²`.
///
/// The score difference is `A (θ - μ_p) + b` with `A = Σ_q⁻¹ - Σ_p⁻¹` and
/// `b = Σ_q⁻¹ (μ_p - μ_q)`, so the expectation is `tr(A Σ_p Aᵀ) + ‖b‖²`.
pub fn fisher_divergence_gaussian(p: &GaussianDist, q: &GaussianDist) -> Result<f64> {
    check_pair(p, q)?;
    let a = q.precision() - p.precision();
    let b = q.precision() * (p.mean() - q.mean());
    let quad = (&a * p.covariance() * a.transpose()).trace();
    Ok((quad + b.norm_squared()).max(0.0))
}

/// Lattice `{α_k = m_k · grid_res · K, Σ m_k = 1/grid_res}` in lexicographic
/// order.
pub fn simplex_lattice(k: usize, grid_res: f64) -> Result<Vec<TaskWeights>> {
    if k == 0 {
        return Err(ArmlError::arg("lattice needs k >= 1"));
    }
    if !(grid_res > 0.0 && grid_res <= 1.0) {
        return Err(ArmlError::arg(format!("grid_res must be in (0, 1], got {grid_res}")));
    }
    let m = (1.0 / grid_res).round();
    if ((m * grid_res) - 1.0).abs() > 1e-9 {
        return Err(ArmlError::arg(format!(
            "grid_res must be the reciprocal of an integer, got {grid_res}"
        )));
    }
    let m = m as usize;
    let step = k as f64 / m as f64;
    let mut out = Vec::new();
    let mut parts = vec![0usize; k];
    fn rec(pos: usize, left: usize, parts: &mut [usize], step: f64, out: &mut Vec<TaskWeights>) {
        let k = parts.len();
        if pos == k - 1 {
            parts[pos] = left;
            let raw: Vec<f64> = parts.iter().map(|&p| p as f64 * step).collect();
            let drift = k as f64 - raw.iter().sum::<f64>();
            let mut alpha = raw;
            // keep the sum exact; the last nonzero part absorbs rounding
            if let Some(i) = alpha.iter().rposition(|&a| a > 0.0) {
                alpha[i] += drift;
            }
            out.push(TaskWeights::new(alpha).expect("lattice point on the simplex"));
            return;
        }
        for v in 0..=left {
            parts[pos] = v;
            rec(pos + 1, left - v, parts, step, out);
        }
    }
    rec(0, m, &mut parts, step, &mut out);
    Ok(out)
}

/// Exhaustive minimizer of `KL(p* ‖ p_α)` over the simplex lattice.
/// Ties go to the lexicographically smallest `α`.
pub fn brute_force_optimal_weights(
    family: &GaussianFamily,
    grid_res: f64,
) -> Result<(TaskWeights, f64)> {
    if family.k() > MAX_BRUTE_FORCE_K {
        return Err(ArmlError::Capability(format!(
            "brute-force enumeration supports K <= {MAX_BRUTE_FORCE_K}, got {}",
            family.k()
        )));
    }
    let lattice = simplex_lattice(family.k(), grid_res)?;
    let mut best: Option<(TaskWeights, f64)> = None;
    for alpha in lattice {
        let kl = kl_gaussian(family.p_star(), &surrogate_prior(family, &alpha)?)?;
        if best.as_ref().is_none_or(|(_, b)| kl < *b) {
            best = Some((alpha, kl));
        }
    }
    Ok(best.expect("lattice is never empty"))
}

/// `E_{θ~p*} ‖∇ log p*(θ) - Σ_k α_k ∇ log p(T_k | θ)‖²`, the score-matching
/// objective with `p*` standing in for the main task.
pub fn fisher_matching_objective(family: &GaussianFamily, alpha: &TaskWeights) -> Result<f64> {
    fisher_divergence_gaussian(family.p_star(), &surrogate_prior(family, alpha)?)
}

/// Residual between the surrogate-prior score and the weighted sum of task
/// scores at `theta`.
pub fn arml_closed_form_check(
    family: &GaussianFamily,
    alpha: &TaskWeights,
    theta: &ParamVector,
) -> Result<f64> {
    let x = theta.shared();
    if x.len() != family.dim() {
        return Err(ArmlError::arg(format!(
            "theta of dimension {} for a {}-dimensional family",
            x.len(),
            family.dim()
        )));
    }
    let prior = surrogate_prior(family, alpha)?;
    let lhs = prior.score(x)?;
    let xv = DVector::from_column_slice(x);
    let sigma_inv = cholesky_spd(family.sigma())?.inverse();
    let mut rhs = DVector::zeros(family.dim());
    for (a, c) in alpha.as_slice().iter().zip(family.centers()) {
        rhs -= &sigma_inv * (&xv - c) * *a;
    }
    Ok((lhs - rhs).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kl_hat: f64,
    pub kl_star: f64,
    pub gap: f64,
    pub alpha_star: TaskWeights,
}

/// Compares the KL reached by `alpha_hat` with the lattice optimum.
pub fn theorem_bound_probe(
    family: &GaussianFamily,
    alpha_hat: &TaskWeights,
    grid_res: f64,
) -> Result<BoundReport> {
    let (alpha_star, kl_star) = brute_force_optimal_weights(family, grid_res)?;
    let kl_hat = kl_gaussian(family.p_star(), &surrogate_prior(family, alpha_hat)?)?;
    Ok(BoundReport {
        kl_hat,
        kl_star,
        gap: kl_hat - kl_star,
        alpha_star,
    })
}
