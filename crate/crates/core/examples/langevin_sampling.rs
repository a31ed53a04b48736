//! Langevin steps on a Gaussian joint likelihood. The sample spread matches
//! the target standard deviation.
//!
//! cargo run --release --example langevin_sampling

use arml::params::ParamVector;
use arml::random::{RngState, Stream};
use arml::reweight::TaskWeights;
use arml::tasks::{GaussianTask, GaussianTaskSpec, TaskModel};
use arml::trainer::{joint_grad, langevin_step, Batches};

fn main() -> arml::Result<()> {
    let (d, sigma, eps) = (10, 0.5f64, 1e-3);
    // main and auxiliary both N(0, 2 sigma^2 I): the product is N(0, sigma^2 I)
    let half = GaussianTaskSpec::isotropic(vec![0.0; d], 2.0 * sigma * sigma);
    let main = GaussianTask::new(&half)?;
    let aux: Vec<Box<dyn TaskModel>> = vec![Box::new(GaussianTask::new(&half)?)];
    let alpha = TaskWeights::uniform(1);
    let batches = Batches {
        main: vec![],
        aux: vec![vec![]],
    };

    let mut rng = RngState::for_stream(7, Stream::Noise);
    let mut theta = ParamVector::from_shared(vec![3.0; d])?;
    let (mut sum_sq, mut count) = (0.0, 0usize);
    for t in 0..100_000 {
        let g = joint_grad(&theta, &main, &aux, &alpha, &batches, 0.0)?;
        theta = langevin_step(&theta, &g, eps, &mut rng)?.theta;
        if t >= 5_000 {
            sum_sq += theta.values().iter().map(|v| v * v).sum::<f64>();
            count += d;
        }
        if t % 20_000 == 0 {
            println!("step {t:>6}  theta[0] {:+.4}", theta.values()[0]);
        }
    }
    println!("sample std {:.4}, target {sigma}", (sum_sq / count as f64).sqrt());
    Ok(())
}
