//! Learned weights as the number of main-task observations shrinks.
//!
//! cargo run --release --example scarcity_sweep

use arml::harness::benchmarks::GaussianBenchmark;
use arml::harness::{execute, generate_gaussian_family, GaussianFamilyGen};
use arml::oracle::brute_force_optimal_weights;

fn main() -> arml::Result<()> {
    let gen = GaussianFamilyGen {
        dim: 2,
        k: 3,
        spread: 4.0,
        isotropic: true,
        target_grid: 0.05,
        seed: 7,
    };
    let family = generate_gaussian_family(&gen)?.family;
    let (star, _) = brute_force_optimal_weights(&family, 0.05)?;
    println!("alpha* {:?}", star.as_slice());
    for n in [10, 30, 100, 300, 1000] {
        let bench = GaussianBenchmark {
            main_n: n,
            ..Default::default()
        };
        let (_, r) = execute(&bench.config("scarcity", &family, 5, 1))?;
        println!("n {n:>5}: alpha {:?}", r.final_weights().as_slice());
    }
    Ok(())
}
