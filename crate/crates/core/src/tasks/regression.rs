use crate::error::{ArmlError, Result};
use crate::params::{Gradient, ParamVector, TaskId};

use super::{batch_scale, Dataset, TaskKind, TaskModel};

/// Weights live in the shared segment (length `p`); when `head` is set the
/// task also owns a one-element intercept in its head segment.
fn linear_predictor(
    data: &Dataset,
    theta: &ParamVector,
    head: Option<TaskId>,
) -> Result<(Vec<f64>, f64)> {
    let w = theta.shared();
    if w.len() != data.input_dim() {
        return Err(ArmlError::arg(format!(
            "shared segment has length {} but inputs have {} features",
            w.len(),
            data.input_dim()
        )));
    }
    let b = match head {
        None => 0.0,
        Some(id) => {
            let h = theta
                .head(id)
                .ok_or_else(|| ArmlError::arg(format!("layout has no head segment for {id}")))?;
            if h.len() != 1 {
                return Err(ArmlError::arg("linear model head must hold one intercept"));
            }
            h[0]
        }
    };
    Ok((w.to_vec(), b))
}

fn eta(data: &Dataset, i: usize, w: &[f64], b: f64) -> f64 {
    let x = data.inputs().row(i);
    x.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>() + b
}

/// Accumulates `scale * sum_i r_i * [x_i, 1]` into the gradient.
fn accumulate(
    data: &Dataset,
    theta: &ParamVector,
    head: Option<TaskId>,
    batch: &[usize],
    scale: f64,
    residual: impl Fn(usize) -> f64,
) -> Gradient {
    let p = data.input_dim();
    let mut gw = vec![0.0; p];
    let mut gb = 0.0;
    for &i in batch {
        let r = residual(i);
        for (g, x) in gw.iter_mut().zip(data.inputs().row(i).iter()) {
            *g += r * x;
        }
        gb += r;
    }
    let mut g = Gradient::zeros(theta.layout().clone());
    for (dst, v) in g.shared_mut().iter_mut().zip(gw) {
        *dst = scale * v;
    }
    if let Some(id) = head {
        if let Some(h) = g.head_mut(id) {
            h[0] = scale * gb;
        }
    }
    g
}

/// `y = x.w + b + noise`, `noise ~ N(0, noise_var)`.
#[derive(Clone, Debug)]
pub struct LinearRegressionTask {
    data: Dataset,
    noise_var: f64,
    head: Option<TaskId>,
}

impl LinearRegressionTask {
    pub fn new(data: Dataset, noise_var: f64, head: Option<TaskId>) -> Result<Self> {
        if !(noise_var > 0.0) {
            return Err(ArmlError::arg("noise variance must be > 0"));
        }
        if data.target_dim() != 1 {
            return Err(ArmlError::arg("linear regression needs one target column"));
        }
        Ok(LinearRegressionTask {
            data,
            noise_var,
            head,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }
}

impl TaskModel for LinearRegressionTask {
    fn kind(&self) -> TaskKind {
        TaskKind::LinearRegression
    }

    fn head(&self) -> Option<TaskId> {
        self.head
    }

    fn n_examples(&self) -> Option<usize> {
        Some(self.data.n())
    }

    fn log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<f64> {
        let scale = batch_scale(batch, self.data.n())?;
        let (w, b) = linear_predictor(&self.data, theta, self.head)?;
        let sse: f64 = batch
            .iter()
            .map(|&i| (self.data.target(i, 0) - eta(&self.data, i, &w, b)).powi(2))
            .sum();
        Ok(-scale * sse / (2.0 * self.noise_var))
    }

    fn grad_log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<Gradient> {
        let scale = batch_scale(batch, self.data.n())?;
        let (w, b) = linear_predictor(&self.data, theta, self.head)?;
        Ok(accumulate(&self.data, theta, self.head, batch, scale, |i| {
            (self.data.target(i, 0) - eta(&self.data, i, &w, b)) / self.noise_var
        }))
    }

    /// `-(n/2) ln(2 pi sigma^2)`
    fn log_normalizer(&self) -> f64 {
        -0.5 * self.data.n() as f64 * (2.0 * std::f64::consts::PI * self.noise_var).ln()
    }
}

/// Bernoulli likelihood with a logit link; labels are 0/1.
#[derive(Clone, Debug)]
pub struct LogisticRegressionTask {
    data: Dataset,
    head: Option<TaskId>,
}

impl LogisticRegressionTask {
    pub fn new(data: Dataset, head: Option<TaskId>) -> Result<Self> {
        if data.target_dim() != 1 {
            return Err(ArmlError::arg("logistic regression needs one label column"));
        }
        if (0..data.n()).any(|i| {
            let y = data.target(i, 0);
            y != 0.0 && y != 1.0
        }) {
            return Err(ArmlError::arg("logistic labels must be 0 or 1"));
        }
        Ok(LogisticRegressionTask { data, head })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl TaskModel for LogisticRegressionTask {
    fn kind(&self) -> TaskKind {
        TaskKind::LogisticRegression
    }

    fn head(&self) -> Option<TaskId> {
        self.head
    }

    fn n_examples(&self) -> Option<usize> {
        Some(self.data.n())
    }

    fn log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<f64> {
        let scale = batch_scale(batch, self.data.n())?;
        let (w, b) = linear_predictor(&self.data, theta, self.head)?;
        let ll: f64 = batch
            .iter()
            .map(|&i| {
                let z = eta(&self.data, i, &w, b);
                self.data.target(i, 0) * z - softplus(z)
            })
            .sum();
        Ok(scale * ll)
    }

    fn grad_log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<Gradient> {
        let scale = batch_scale(batch, self.data.n())?;
        let (w, b) = linear_predictor(&self.data, theta, self.head)?;
        Ok(accumulate(&self.data, theta, self.head, batch, scale, |i| {
            self.data.target(i, 0) - sigmoid(eta(&self.data, i, &w, b))
        }))
    }
}
