use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{ArmlError, Result};
use crate::trainer::{MetricsRecord, Stage};

pub fn metrics_header(k: usize) -> String {
    let mut cols = vec!["iter".to_string(), "stage".into(), "main_loss".into()];
    cols.extend((1..=k).map(|i| format!("aux_loss_{i}")));
    cols.extend((1..=k).map(|i| format!("alpha_{i}")));
    cols.push("arml_obj".into());
    cols.push("grad_norm_main".into());
    cols.join(",")
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_metrics_csv(records: &[MetricsRecord]) -> Result<String> {
    let first = records
        .first()
        .ok_or_else(|| ArmlError::arg("no metrics records to write"))?;
    let k = first.alpha.len();
    let mut out = metrics_header(k);
    out.push('\n');
    for r in records {
        if r.alpha.len() != k || r.aux_losses.len() != k {
            return Err(ArmlError::arg(format!(
                "record {} has {} weights and {} auxiliary losses, expected {k}",
                r.iteration,
                r.alpha.len(),
                r.aux_losses.len()
            )));
        }
        let mut row = vec![r.iteration.to_string(), r.stage.as_str().to_string(), fmt_f64(r.main_loss)];
        row.extend(r.aux_losses.iter().map(|v| fmt_f64(*v)));
        row.extend(r.alpha.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(r.arml_objective));
        row.push(fmt_f64(r.grad_norm_main));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_metrics_csv(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = render_metrics_csv(records)?;
    let file = File::create(path).map_err(|e| ArmlError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(body.as_bytes()).map_err(|e| ArmlError::io(path, e))?;
    w.flush().map_err(|e| ArmlError::io(path, e))
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let csv_err = |message: String| ArmlError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.len() < 5 || (headers.len() - 5) % 2 != 0 {
        return Err(csv_err(format!("unexpected column count {}", headers.len())));
    }
    let k = (headers.len() - 5) / 2;
    let expected = metrics_header(k);
    if headers.iter().collect::<Vec<_>>().join(",") != expected {
        return Err(csv_err(format!("header does not match `{expected}`")));
    }
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|e| csv_err(format!("row {}: column {}: {e}", line + 1, headers[i].to_string())))
        };
        let iteration = row[0]
            .parse::<usize>()
            .map_err(|e| csv_err(format!("row {}: iter: {e}", line + 1)))?;
        let stage: Stage = row[1].parse().map_err(|e: String| csv_err(e))?;
        out.push(MetricsRecord {
            iteration,
            stage,
            main_loss: num(2)?,
            aux_losses: (0..k).map(|i| num(3 + i)).collect::<Result<_>>()?,
            alpha: (0..k).map(|i| num(3 + k + i)).collect::<Result<_>>()?,
            arml_objective: num(3 + 2 * k)?,
            grad_norm_main: num(4 + 2 * k)?,
        });
    }
    Ok(out)
}

/// A gnuplot script drawing the weight trajectories from `csv_name`.
pub fn gnuplot_script(csv_name: &str, k: usize) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'iteration'\n");
    s.push_str("set ylabel 'task weight'\n");
    let plots: Vec<String> = (0..k)
        .map(|i| format!("'{csv_name}' using 1:{} with lines", 4 + k + i))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<MetricsRecord> {
        (1..=3)
            .map(|i| MetricsRecord {
                iteration: i,
                stage: if i < 3 { Stage::Sampling } else { Stage::Optimizing },
                main_loss: 1.0 / 3.0 * i as f64,
                aux_losses: vec![0.1 * i as f64, std::f64::consts::PI],
                alpha: vec![0.7 + 0.1 * i as f64, 1.3 - 0.1 * i as f64],
                arml_objective: 1e-300,
                grad_norm_main: 123456.789,
            })
            .collect()
    }

    #[test]
    fn header_and_line_count() {
        let body = render_metrics_csv(&records()).unwrap();
        let lines: Vec<_> = body.split_terminator('\n').collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            "iter,stage,main_loss,aux_loss_1,aux_loss_2,alpha_1,alpha_2,arml_obj,grad_norm_main"
        );
        assert!(!body.contains('\r'));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics_csv(&records(), &p).unwrap();
        let back = read_metrics_csv(&p).unwrap();
        assert_eq!(back, records());
        for r in &back {
            assert!((r.alpha.iter().sum::<f64>() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_rejected() {
        assert!(render_metrics_csv(&[]).is_err());
    }

    #[test]
    fn io_error_names_path() {
        let err = write_metrics_csv(&records(), "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
