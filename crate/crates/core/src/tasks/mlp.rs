//! Fully connected tanh network with a linear output layer and squared loss,
//! differentiated by hand.
//!
//! Parameter order inside a segment is, per layer, the `out x in` weight
//! matrix in row-major order followed by the `out` biases.

use std::sync::Arc;

use crate::error::{ArmlError, Result};
use crate::params::{Gradient, Layout, ParamVector, SegmentKind, TaskId};

use super::{batch_scale, Dataset, TaskKind, TaskModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Place {
    Shared,
    Head,
}

#[derive(Clone, Copy, Debug)]
struct LayerLoc {
    fan_in: usize,
    fan_out: usize,
    place: Place,
    offset: usize,
}

impl LayerLoc {
    fn len(&self) -> usize {
        self.fan_out * (self.fan_in + 1)
    }
}

#[derive(Clone, Debug)]
pub struct MlpTask {
    sizes: Vec<usize>,
    layers: Vec<LayerLoc>,
    data: Dataset,
    noise_var: f64,
    head: Option<TaskId>,
}

fn layer_params(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

/// Builds an MLP task.
///
/// With `head = Some(id)` every layer except the last is shared and the
/// final linear layer lives in `head(id)`; this needs at least one hidden
/// layer. With `head = None` all layers are shared, which for
/// `layer_sizes = [p, q]` is plain linear regression with an intercept.
pub fn make_mlp_task(
    layer_sizes: &[usize],
    activation: Activation,
    dataset: Dataset,
    head: Option<TaskId>,
    noise_var: f64,
) -> Result<MlpTask> {
    let Activation::Tanh = activation;
    if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
        return Err(ArmlError::arg("layer sizes must have >= 2 entries, all >= 1"));
    }
    if head.is_some() && layer_sizes.len() < 3 {
        return Err(ArmlError::arg("a task head needs at least one hidden layer"));
    }
    if dataset.input_dim() != layer_sizes[0] {
        return Err(ArmlError::arg(format!(
            "network input size {} does not match dataset with {} features",
            layer_sizes[0],
            dataset.input_dim()
        )));
    }
    if dataset.target_dim() != *layer_sizes.last().unwrap() {
        return Err(ArmlError::arg(format!(
            "network output size {} does not match dataset with {} targets",
            layer_sizes.last().unwrap(),
            dataset.target_dim()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(ArmlError::arg("noise variance must be > 0"));
    }
    let n_layers = layer_sizes.len() - 1;
    let mut layers = Vec::with_capacity(n_layers);
    let mut shared_off = 0;
    for (l, w) in layer_sizes.windows(2).enumerate() {
        let is_head = head.is_some() && l == n_layers - 1;
        let loc = LayerLoc {
            fan_in: w[0],
            fan_out: w[1],
            place: if is_head { Place::Head } else { Place::Shared },
            offset: if is_head { 0 } else { shared_off },
        };
        if !is_head {
            shared_off += loc.len();
        }
        layers.push(loc);
    }
    Ok(MlpTask {
        sizes: layer_sizes.to_vec(),
        layers,
        data: dataset,
        noise_var,
        head,
    })
}

/// Layout for several MLP tasks sharing hidden layers `[input, hidden..]`,
/// one head per `(task, output_dim)`.
pub fn mlp_layout(input: usize, hidden: &[usize], heads: &[(TaskId, usize)]) -> Result<Arc<Layout>> {
    let mut trunk = vec![input];
    trunk.extend_from_slice(hidden);
    let mut parts = vec![("backbone".to_string(), SegmentKind::Shared, layer_params(&trunk))];
    let last = *trunk.last().unwrap();
    for &(id, out) in heads {
        parts.push((format!("head{}", id.0), SegmentKind::Head(id), out * (last + 1)));
    }
    Ok(Arc::new(Layout::from_parts(parts)?))
}

impl MlpTask {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn shared_len(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.place == Place::Shared)
            .map(LayerLoc::len)
            .sum()
    }

    pub fn head_len(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.place == Place::Head)
            .map(LayerLoc::len)
            .sum()
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn segments<'a>(&self, theta: &'a ParamVector) -> Result<(&'a [f64], &'a [f64])> {
        let shared = theta.shared();
        if shared.len() != self.shared_len() {
            return Err(ArmlError::arg(format!(
                "MLP expects a shared segment of length {}, got {}",
                self.shared_len(),
                shared.len()
            )));
        }
        let head: &[f64] = match self.head {
            None => &[],
            Some(id) => {
                let h = theta
                    .head(id)
                    .ok_or_else(|| ArmlError::arg(format!("layout has no head segment for {id}")))?;
                if h.len() != self.head_len() {
                    return Err(ArmlError::arg(format!(
                        "MLP expects a head of length {}, got {}",
                        self.head_len(),
                        h.len()
                    )));
                }
                h
            }
        };
        Ok((shared, head))
    }

    fn layer<'a>(&self, loc: &LayerLoc, shared: &'a [f64], head: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let src = match loc.place {
            Place::Shared => shared,
            Place::Head => head,
        };
        let w_len = loc.fan_out * loc.fan_in;
        let s = &src[loc.offset..loc.offset + loc.len()];
        (&s[..w_len], &s[w_len..])
    }

    /// Activations of every layer; the last entry is the network output.
    fn forward(&self, x: &[f64], shared: &[f64], head: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (l, loc) in self.layers.iter().enumerate() {
            let (w, b) = self.layer(loc, shared, head);
            let input = &acts[l];
            let out: Vec<f64> = (0..loc.fan_out)
                .map(|o| {
                    let row = &w[o * loc.fan_in..(o + 1) * loc.fan_in];
                    let z = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + b[o];
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    fn example_ll(&self, i: usize, out: &[f64]) -> f64 {
        let sse: f64 = out
            .iter()
            .enumerate()
            .map(|(j, o)| (self.data.target(i, j) - o).powi(2))
            .sum();
        -sse / (2.0 * self.noise_var)
    }
}

impl TaskModel for MlpTask {
    fn kind(&self) -> TaskKind {
        TaskKind::Mlp
    }

    fn head(&self) -> Option<TaskId> {
        self.head
    }

    fn n_examples(&self) -> Option<usize> {
        Some(self.data.n())
    }

    fn log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<f64> {
        let scale = batch_scale(batch, self.data.n())?;
        let (shared, head) = self.segments(theta)?;
        let total: f64 = batch
            .iter()
            .map(|&i| {
                let acts = self.forward(&self.data.input_row(i), shared, head);
                self.example_ll(i, acts.last().unwrap())
            })
            .sum();
        Ok(scale * total)
    }

    fn grad_log_likelihood(&self, theta: &ParamVector, batch: &[usize]) -> Result<Gradient> {
        self.value_and_grad(theta, batch).map(|(_, g)| g)
    }

    fn value_and_grad(&self, theta: &ParamVector, batch: &[usize]) -> Result<(f64, Gradient)> {
        let scale = batch_scale(batch, self.data.n())?;
        let (shared, head) = self.segments(theta)?;
        let mut g_shared = vec![0.0; shared.len()];
        let mut g_head = vec![0.0; head.len()];
        let mut total = 0.0;
        for &i in batch {
            let acts = self.forward(&self.data.input_row(i), shared, head);
            let out = acts.last().unwrap();
            total += self.example_ll(i, out);
            // d log p / d output
            let mut delta: Vec<f64> = out
                .iter()
                .enumerate()
                .map(|(j, o)| (self.data.target(i, j) - o) / self.noise_var)
                .collect();
            for l in (0..self.layers.len()).rev() {
                let loc = self.layers[l];
                if l != self.layers.len() - 1 {
                    for (d, a) in delta.iter_mut().zip(&acts[l + 1]) {
                        *d *= 1.0 - a * a;
                    }
                }
                let (w, _) = self.layer(&loc, shared, head);
                let grad = match loc.place {
                    Place::Shared => &mut g_shared,
                    Place::Head => &mut g_head,
                };
                let seg = &mut grad[loc.offset..loc.offset + loc.len()];
                let (gw, gb) = seg.split_at_mut(loc.fan_out * loc.fan_in);
                let input = &acts[l];
                for o in 0..loc.fan_out {
                    for (k, a) in input.iter().enumerate() {
                        gw[o * loc.fan_in + k] += delta[o] * a;
                    }
                    gb[o] += delta[o];
                }
                if l > 0 {
                    let mut prev = vec![0.0; loc.fan_in];
                    for o in 0..loc.fan_out {
                        for (k, p) in prev.iter_mut().enumerate() {
                            *p += w[o * loc.fan_in + k] * delta[o];
                        }
                    }
                    delta = prev;
                }
            }
        }
        let mut g = Gradient::zeros(theta.layout().clone());
        for (dst, v) in g.shared_mut().iter_mut().zip(g_shared) {
            *dst = scale * v;
        }
        if let Some(id) = self.head {
            let dst = g.head_mut(id).expect("checked in segments()");
            for (d, v) in dst.iter_mut().zip(g_head) {
                *d = scale * v;
            }
        }
        Ok((scale * total, g))
    }
}
