use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{ArmlError, Result};

/// Supervised examples: `inputs` is `n x p`, `targets` is `n x q`.
///
/// Class labels for logistic tasks are stored as `0.0` / `1.0` in a single
/// target column.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    targets: DMatrix<f64>,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(ArmlError::arg("dataset needs at least one example"));
        }
        if inputs.nrows() != targets.nrows() {
            return Err(ArmlError::arg(format!(
                "inputs have {} rows but targets have {}",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if inputs.iter().chain(targets.iter()).any(|v| v.is_nan()) {
            return Err(ArmlError::arg("dataset contains NaN"));
        }
        Ok(Dataset { inputs, targets })
    }

    /// Builds a dataset from row vectors and scalar targets.
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(ArmlError::arg("ragged input rows"));
        }
        let inputs = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let targets = DMatrix::from_column_slice(targets.len(), 1, targets);
        Self::new(inputs, targets)
    }

    pub fn n(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn input_row(&self, i: usize) -> Vec<f64> {
        self.inputs.row(i).iter().copied().collect()
    }

    pub fn target(&self, i: usize, j: usize) -> f64 {
        self.targets[(i, j)]
    }

    /// Reads `x0..x{p-1}` followed by `y` or `y0..y{q-1}`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| ArmlError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        let (p, q) = parse_header(headers.iter().collect()).map_err(|m| ArmlError::Csv {
            path: path.to_path_buf(),
            message: m,
        })?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            if record.len() != p + q {
                return Err(ArmlError::Csv {
                    path: path.to_path_buf(),
                    message: format!("row {} has {} fields, expected {}", row_idx + 2, record.len(), p + q),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| ArmlError::Csv {
                    path: path.to_path_buf(),
                    message: format!("row {} column {}: `{field}` is not a number", row_idx + 2, j + 1),
                })?;
                if j < p {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        let n = ys.len() / q.max(1);
        let inputs = DMatrix::from_row_slice(n, p, &xs);
        let targets = DMatrix::from_row_slice(n, q, &ys);
        Self::new(inputs, targets).map_err(|e| ArmlError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| ArmlError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(csv_err)?;
        let mut header: Vec<String> = (0..self.input_dim()).map(|j| format!("x{j}")).collect();
        if self.target_dim() == 1 {
            header.push("y".into());
        } else {
            header.extend((0..self.target_dim()).map(|j| format!("y{j}")));
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n() {
            let row: Vec<String> = self
                .inputs
                .row(i)
                .iter()
                .chain(self.targets.row(i).iter())
                .map(|v| format!("{v:.17e}"))
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| ArmlError::io(path, e))
    }
}

fn parse_header(cols: Vec<&str>) -> std::result::Result<(usize, usize), String> {
    let p = cols
        .iter()
        .take_while(|c| c.starts_with('x'))
        .count();
    for (j, c) in cols[..p].iter().enumerate() {
        if *c != format!("x{j}") {
            return Err(format!("expected column `x{j}`, found `{c}`"));
        }
    }
    let rest = &cols[p..];
    match rest {
        [] => Err("no target column".into()),
        ["y"] => Ok((p, 1)),
        _ => {
            for (j, c) in rest.iter().enumerate() {
                if *c != format!("y{j}") {
                    return Err(format!("expected column `y{j}`, found `{c}`"));
                }
            }
            Ok((p, rest.len()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = Dataset::from_rows(&[vec![1.0, 2.5], vec![-0.1, 1e-7]], &[0.3, 1.0 / 3.0]).unwrap();
        ds.write_csv(&path).unwrap();
        let back = Dataset::load_csv(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn multi_target_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "x0,y0,y1\n1.0,2.0,3.0\n4.0,5.0,6.0\n").unwrap();
        let ds = Dataset::load_csv(&path).unwrap();
        assert_eq!((ds.n(), ds.input_dim(), ds.target_dim()), (2, 1, 2));
        assert_eq!(ds.target(1, 1), 6.0);
    }

    #[test]
    fn bad_csv_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x0,x2,y\n1,2,3\n").unwrap();
        assert!(Dataset::load_csv(&path).is_err());
        std::fs::write(&path, "x0,y\n1,abc\n").unwrap();
        let err = Dataset::load_csv(&path).unwrap_err().to_string();
        assert!(err.contains("not a number"), "{err}");
        std::fs::write(&path, "x0,y\n1,nan\n").unwrap();
        assert!(Dataset::load_csv(&path).is_err());
    }
}
