//! Stage-1 stopping rule: the L∞ change over the last `W` iterations of an
//! EMA (decay 0.99) of the weights must fall strictly below `tol`.

use crate::linalg::linf_distance;
use crate::reweight::TaskWeights;

pub const WEIGHT_EMA_DECAY: f64 = 0.99;

/// Pure form of the check over a full weight trajectory (oldest first).
pub fn weight_convergence_check(traj: &[TaskWeights], tol: f64, window: usize) -> bool {
    assert!(window >= 1, "window must be >= 1");
    if traj.len() <= window {
        return false;
    }
    let mut ema: Vec<f64> = traj[0].as_slice().to_vec();
    let lag_index = traj.len() - 1 - window;
    let mut lagged = if lag_index == 0 { Some(ema.clone()) } else { None };
    for (i, w) in traj.iter().enumerate().skip(1) {
        for (e, a) in ema.iter_mut().zip(w.as_slice()) {
            *e = WEIGHT_EMA_DECAY * *e + (1.0 - WEIGHT_EMA_DECAY) * a;
        }
        if i == lag_index {
            lagged = Some(ema.clone());
        }
    }
    linf_distance(&ema, &lagged.expect("lag index inside trajectory")) < tol
}

/// Incremental version used by the trainer: `O(K)` per push, keeps the last
/// `W + 1` EMA values.
#[derive(Clone, Debug)]
pub struct ConvergenceMonitor {
    tol: f64,
    window: usize,
    ema: Option<Vec<f64>>,
    history: std::collections::VecDeque<Vec<f64>>,
}

impl ConvergenceMonitor {
    pub fn new(tol: f64, window: usize) -> Self {
        assert!(window >= 1, "window must be >= 1");
        ConvergenceMonitor {
            tol,
            window,
            ema: None,
            history: std::collections::VecDeque::with_capacity(window + 1),
        }
    }

    pub fn push(&mut self, alpha: &TaskWeights) {
        let ema = match self.ema.take() {
            None => alpha.as_slice().to_vec(),
            Some(mut e) => {
                for (x, a) in e.iter_mut().zip(alpha.as_slice()) {
                    *x = WEIGHT_EMA_DECAY * *x + (1.0 - WEIGHT_EMA_DECAY) * a;
                }
                e
            }
        };
        if self.history.len() == self.window + 1 {
            self.history.pop_front();
        }
        self.history.push_back(ema.clone());
        self.ema = Some(ema);
    }

    pub fn converged(&self) -> bool {
        if self.history.len() < self.window + 1 {
            return false;
        }
        linf_distance(self.history.back().unwrap(), self.history.front().unwrap()) < self.tol
    }
}
