//! Learns weights on a planted Gaussian family and compares them with the
//! brute-force KL optimum.
//!
//! cargo run --release --example gaussian_recovery [-- K DIM SEED]

use arml::harness::benchmarks::GaussianBenchmark;
use arml::harness::{execute, generate_gaussian_family, GaussianFamilyGen};
use arml::linalg::linf_distance;
use arml::oracle::{brute_force_optimal_weights, theorem_bound_probe};

fn main() -> arml::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (k, dim, seed) = match args[..] {
        [k, d, s] => (k as usize, d as usize, s),
        _ => (3, 4, 1),
    };
    let gen = GaussianFamilyGen {
        dim,
        k,
        spread: 4.0,
        isotropic: false,
        target_grid: 0.05,
        seed,
    };
    let planted = generate_gaussian_family(&gen)?;
    let family = planted.family;
    println!("planted alpha  {:?}", planted.alpha_star.as_slice());

    let cfg = GaussianBenchmark::default().config("gaussian_recovery", &family, seed + 1, seed);
    let start = std::time::Instant::now();
    let (_, result) = execute(&cfg)?;
    let alpha = result.final_weights();
    let (star, kl_star) = brute_force_optimal_weights(&family, 0.05)?;
    let probe = theorem_bound_probe(&family, alpha, 0.05)?;

    println!("learned alpha  {:?}", alpha.as_slice());
    println!("lattice alpha* {:?}", star.as_slice());
    println!("L-inf distance {:.4}", linf_distance(alpha.as_slice(), star.as_slice()));
    println!("KL learned {:.5} optimum {kl_star:.5} gap {:.5}", probe.kl_hat, probe.gap);
    println!(
        "converged at {:?}, stage 1 ended at {:?}, {:.1}s",
        result.converged_at,
        result.stage1_end,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
