use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};

/// Tolerance on `sum(alpha) = K`.
pub const SUM_TOL: f64 = 1e-9;

/// Auxiliary-task weights on the scaled simplex `{alpha >= 0, sum alpha = K}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TaskWeights(Vec<f64>);

impl TaskWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        let k = alpha.len();
        if k == 0 {
            return Err(ArmlError::arg("task weights need at least one task"));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(ArmlError::arg(format!(
                "task weights must be finite and >= 0: {alpha:?}"
            )));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - k as f64).abs() > SUM_TOL {
            return Err(ArmlError::arg(format!(
                "task weights must sum to {k}, got {sum}"
            )));
        }
        Ok(TaskWeights(alpha))
    }

    /// All ones, the starting point of every scheme.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "uniform weights need k >= 1");
        TaskWeights(vec![1.0; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for TaskWeights {
    type Error = ArmlError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        TaskWeights::new(v)
    }
}

impl From<TaskWeights> for Vec<f64> {
    fn from(w: TaskWeights) -> Self {
        w.0
    }
}

impl std::ops::Index<usize> for TaskWeights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Shared-segment scores of the main task and of each auxiliary task at one
/// parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSnapshot {
    pub g_main: Vec<f64>,
    pub g_aux: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl GradientSnapshot {
    pub fn new(g_main: Vec<f64>, g_aux: Vec<Vec<f64>>, iteration: usize) -> Result<Self> {
        let snap = GradientSnapshot {
            g_main,
            g_aux,
            iteration,
        };
        snap.validate()?;
        Ok(snap)
    }

    pub fn k(&self) -> usize {
        self.g_aux.len()
    }

    pub fn dim(&self) -> usize {
        self.g_main.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_aux.is_empty() {
            return Err(ArmlError::arg("snapshot needs at least one auxiliary task"));
        }
        let d = self.g_main.len();
        if let Some(k) = self.g_aux.iter().position(|g| g.len() != d) {
            return Err(ArmlError::arg(format!(
                "auxiliary gradient {k} has dimension {} but main has {d}",
                self.g_aux[k].len()
            )));
        }
        let finite = self
            .g_main
            .iter()
            .chain(self.g_aux.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(ArmlError::arg("snapshot contains non-finite gradients"));
        }
        Ok(())
    }

    pub(crate) fn check_weights(&self, alpha: &TaskWeights) -> Result<()> {
        self.validate()?;
        if alpha.k() != self.k() {
            return Err(ArmlError::arg(format!(
                "{} weights for {} auxiliary tasks",
                alpha.k(),
                self.k()
            )));
        }
        Ok(())
    }

    /// Every gradient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        GradientSnapshot {
            g_main: self.g_main.iter().map(|v| v * c).collect(),
            g_aux: self
                .g_aux
                .iter()
                .map(|g| g.iter().map(|v| v * c).collect())
                .collect(),
            iteration: self.iteration,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_validation() {
        assert!(TaskWeights::new(vec![1.0, 1.0]).is_ok());
        assert!(TaskWeights::new(vec![2.0, 0.0]).is_ok());
        assert!(TaskWeights::new(vec![1.5, 0.6]).is_err());
        assert!(TaskWeights::new(vec![2.5, -0.5]).is_err());
        assert!(TaskWeights::new(vec![]).is_err());
        assert!(TaskWeights::new(vec![f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn weights_serde_validates() {
        let w: TaskWeights = serde_json::from_str("[0.5, 1.5]").unwrap();
        assert_eq!(w.as_slice(), &[0.5, 1.5]);
        assert!(serde_json::from_str::<TaskWeights>("[0.5, 0.5]").is_err());
    }

    #[test]
    fn snapshot_dimension_mismatch() {
        assert!(GradientSnapshot::new(vec![1.0, 0.0], vec![vec![1.0]], 0).is_err());
        assert!(GradientSnapshot::new(vec![1.0], vec![], 0).is_err());
    }
}
