//! Fixed-weight grid search, with every child run written to disk.
//!
//! cargo run --release --example grid_search [-- OUT_DIR]

use std::path::PathBuf;

use arml::harness::{load_config, run_grid_search, RunOptions};

fn main() -> arml::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/grid_search.json");
    let cfg = load_config(&path)?;
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("arml_grid_example"));
    let opts = RunOptions {
        out_dir: Some(out),
        jobs: Some(2),
        ..Default::default()
    };
    let g = run_grid_search(&cfg, &opts)?;
    for (c, s) in g.record.candidates.iter().zip(&g.record.scores) {
        println!("{:?}  val NLL {s:.4}", c.as_slice());
    }
    println!("winner {:?}, selection in {}", g.record.winner_weights.as_slice(), g.run_dir.display());
    Ok(())
}
