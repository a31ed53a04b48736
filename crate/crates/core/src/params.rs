//! Flat parameter vectors partitioned into one shared backbone segment and
//! optional per-task head segments.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};

/// Identifier of a task. By convention the main task is `TaskId(0)` and
/// auxiliary tasks are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Shared,
    Head(TaskId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub kind: SegmentKind,
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Partition of `[0, dim)` into named segments.
///
/// Exactly one segment is tagged [`SegmentKind::Shared`]; every head segment
/// belongs to a distinct task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    segments: Vec<Segment>,
    dim: usize,
}

impl Layout {
    /// Builds a layout from `(name, kind, len)` triples laid out back to back.
    pub fn from_parts<S: Into<String>>(parts: Vec<(S, SegmentKind, usize)>) -> Result<Self> {
        let mut offset = 0;
        let segments = parts
            .into_iter()
            .map(|(name, kind, len)| {
                let seg = Segment {
                    name: name.into(),
                    kind,
                    offset,
                    len,
                };
                offset += len;
                seg
            })
            .collect();
        Self::new(segments)
    }

    /// Validates an explicit segment list.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by_key(|s| s.offset);
        let mut cursor = 0;
        for s in &segments {
            if s.offset != cursor {
                return Err(ArmlError::arg(format!(
                    "segment `{}` starts at {} but previous segment ends at {cursor}",
                    s.name, s.offset
                )));
            }
            if s.len == 0 {
                return Err(ArmlError::arg(format!("segment `{}` is empty", s.name)));
            }
            cursor += s.len;
        }
        let shared = segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Shared)
            .count();
        if shared != 1 {
            return Err(ArmlError::arg(format!(
                "layout needs exactly one shared segment, found {shared}"
            )));
        }
        let mut heads: Vec<TaskId> = segments
            .iter()
            .filter_map(|s| match s.kind {
                SegmentKind::Head(id) => Some(id),
                SegmentKind::Shared => None,
            })
            .collect();
        heads.sort();
        if heads.windows(2).any(|w| w[0] == w[1]) {
            return Err(ArmlError::arg("duplicate head segment for one task"));
        }
        Ok(Layout {
            segments,
            dim: cursor,
        })
    }

    /// Layout with a single shared segment covering everything.
    pub fn shared_only(dim: usize) -> Result<Self> {
        Self::from_parts(vec![("shared", SegmentKind::Shared, dim)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn shared(&self) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.kind == SegmentKind::Shared)
            .expect("layout invariant: one shared segment")
    }

    pub fn head(&self, task: TaskId) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| s.kind == SegmentKind::Head(task))
    }
}

/// Model parameters together with their segment layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, layout: Arc<Layout>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(ArmlError::arg(format!(
                "parameter length {} does not match layout dimension {}",
                values.len(),
                layout.dim()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ArmlError::arg(format!("non-finite parameter at index {i}")));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        ParamVector {
            values: vec![0.0; layout.dim()],
            layout,
        }
    }

    /// Convenience constructor for an all-shared vector.
    pub fn from_shared(values: Vec<f64>) -> Result<Self> {
        let layout = Arc::new(Layout::shared_only(values.len())?);
        Self::new(values, layout)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn shared(&self) -> &[f64] {
        &self.values[self.layout.shared().range()]
    }

    pub fn head(&self, task: TaskId) -> Option<&[f64]> {
        self.layout.head(task).map(|s| &self.values[s.range()])
    }

    /// Replaces the values, rejecting the update if anything is non-finite.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(ArmlError::arg("parameter update changes dimension"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ArmlError::arg(format!("non-finite parameter at index {i}")));
        }
        self.values = values;
        Ok(())
    }

    /// Copy with coordinate `i` shifted by `delta`. Used by finite differences.
    pub(crate) fn perturbed(&self, i: usize, delta: f64) -> Self {
        let mut values = self.values.clone();
        values[i] += delta;
        ParamVector {
            values,
            layout: self.layout.clone(),
        }
    }
}

/// Gradient of a scalar with respect to a [`ParamVector`], same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl Gradient {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        Gradient {
            values: vec![0.0; layout.dim()],
            layout,
        }
    }

    pub fn new(values: Vec<f64>, layout: Arc<Layout>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(ArmlError::arg(format!(
                "gradient length {} does not match layout dimension {}",
                values.len(),
                layout.dim()
            )));
        }
        Ok(Gradient { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn shared_mut(&mut self) -> &mut [f64] {
        let r = self.layout.shared().range();
        &mut self.values[r]
    }

    pub fn head_mut(&mut self, task: TaskId) -> Option<&mut [f64]> {
        let r = self.layout.head(task)?.range();
        Some(&mut self.values[r])
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &Gradient) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(ArmlError::arg("gradient dimension mismatch"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.values)
    }
}

/// The shared-backbone part of a gradient.
pub fn shared_slice(g: &Gradient) -> &[f64] {
    &g.values[g.layout.shared().range()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_part() -> Arc<Layout> {
        Arc::new(
            Layout::from_parts(vec![
                ("backbone", SegmentKind::Shared, 4),
                ("head1", SegmentKind::Head(TaskId(1)), 2),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn shared_slice_extracts_backbone() {
        let g = Gradient::new(vec![1.0, 2.0, 3.0, 4.0, 9.0, 9.0], two_part()).unwrap();
        assert_eq!(shared_slice(&g), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn shared_only_layout_returns_whole_vector() {
        let layout = Arc::new(Layout::shared_only(3).unwrap());
        let g = Gradient::new(vec![5.0, 6.0, 7.0], layout).unwrap();
        assert_eq!(shared_slice(&g), g.values());
    }

    #[test]
    fn layout_rejects_gaps_and_double_shared() {
        let gap = Layout::new(vec![
            Segment {
                name: "s".into(),
                kind: SegmentKind::Shared,
                offset: 0,
                len: 2,
            },
            Segment {
                name: "h".into(),
                kind: SegmentKind::Head(TaskId(1)),
                offset: 3,
                len: 2,
            },
        ]);
        assert!(gap.is_err());
        let two = Layout::from_parts(vec![
            ("a", SegmentKind::Shared, 1),
            ("b", SegmentKind::Shared, 1),
        ]);
        assert!(two.is_err());
        let none = Layout::from_parts(vec![("a", SegmentKind::Head(TaskId(1)), 1)]);
        assert!(none.is_err());
    }

    #[test]
    fn param_updates_reject_non_finite() {
        let mut p = ParamVector::zeros(two_part());
        assert!(p
            .set_values(vec![0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0])
            .is_err());
        assert!(p.values().iter().all(|v| *v == 0.0));
        assert!(ParamVector::new(vec![0.0; 5], two_part()).is_err());
    }

    #[test]
    fn masked_dot_product_ignores_heads() {
        use crate::random::{RngState, Stream};
        let layout = two_part();
        let mut rng = RngState::new(11, Stream::Data as u64);
        for _ in 0..50 {
            let a = rng.gaussian_vector(6, 0.0, 1.0).unwrap();
            let b = rng.gaussian_vector(6, 0.0, 1.0).unwrap();
            let ga = Gradient::new(a.clone(), layout.clone()).unwrap();
            let gb = Gradient::new(b.clone(), layout.clone()).unwrap();
            let mask = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
            let oracle: f64 = (0..6).map(|i| mask[i] * a[i] * b[i]).sum();
            let got = crate::linalg::dot(shared_slice(&ga), shared_slice(&gb));
            assert!((got - oracle).abs() < 1e-12);
        }
    }
}
