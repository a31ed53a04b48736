use crate::error::{ArmlError, Result};

use super::weights::TaskWeights;

/// Outcome of a grid search over fixed weight candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSelection {
    pub index: usize,
    pub weights: TaskWeights,
    pub scores: Vec<f64>,
}

/// Index of the smallest score; ties go to the lowest index. NaN scores never
/// win.
pub fn argmin_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some(b) if s >= scores[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Scores every candidate with `evaluate` (typically one full training run
/// returning a validation loss) and returns the best.
pub fn grid_search<F>(candidates: &[TaskWeights], mut evaluate: F) -> Result<GridSelection>
where
    F: FnMut(usize, &TaskWeights) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(ArmlError::arg("grid search needs at least one candidate"));
    }
    let scores = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| evaluate(i, c))
        .collect::<Result<Vec<_>>>()?;
    select(candidates, scores)
}

/// Picks the winner from precomputed scores (e.g. from parallel child runs).
pub fn select(candidates: &[TaskWeights], scores: Vec<f64>) -> Result<GridSelection> {
    if candidates.len() != scores.len() {
        return Err(ArmlError::arg("one score per candidate required"));
    }
    let index = argmin_first(&scores)
        .ok_or_else(|| ArmlError::arg("no candidate produced a finite score"))?;
    Ok(GridSelection {
        index,
        weights: candidates[index].clone(),
        scores,
    })
}
