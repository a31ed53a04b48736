//! Minibatch gradient noise versus injected Langevin noise after training.
//!
//! cargo run --release --example noise_diagnostic

use std::path::PathBuf;

use arml::harness::{diagnose_noise, load_config};

fn main() -> arml::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/relevant_irrelevant.json");
    let cfg = load_config(&path)?;
    for bs in [8, 64, 256] {
        let mut c = cfg.clone();
        c.trainer.batch_size_main = bs.min(20);
        c.trainer.batch_size_aux = bs;
        let r = diagnose_noise(&c)?;
        println!(
            "aux batch {bs:>3}: gradient noise {:.3e}  injected {:.3e}  ratio {:.3}",
            r.grad_noise_std, r.injected_noise_std, r.ratio
        );
    }
    Ok(())
}
