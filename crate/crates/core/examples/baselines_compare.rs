//! Every reweighting scheme on the relevant/irrelevant regression problem.
//!
//! cargo run --release --example baselines_compare

use std::path::PathBuf;

use arml::harness::{execute, load_config, ReweighterSpec};

fn main() -> arml::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/relevant_irrelevant.json");
    let base = load_config(&path)?;
    let schemes = [
        ReweighterSpec::Arml { snapshot_ema: None },
        ReweighterSpec::Uniform,
        ReweighterSpec::Adaloss,
        ReweighterSpec::Gradnorm { gamma: 1.5 },
        ReweighterSpec::Cosine,
        ReweighterSpec::OlAux,
    ];
    println!("{:<10} {:>16} {:>10}", "scheme", "final alpha", "val NLL");
    for spec in schemes {
        let mut cfg = base.clone();
        cfg.reweighter = spec;
        let (problem, result) = execute(&cfg)?;
        let a = result.final_weights().as_slice();
        let name = serde_json::to_value(&cfg.reweighter).expect("serializable")["kind"].clone();
        println!(
            "{:<10} {:>7.3} {:>7.3} {:>10.4}",
            name.as_str().unwrap_or("?"),
            a[0],
            a[1],
            problem.evaluation_loss(&result.final_theta)?
        );
    }
    Ok(())
}
