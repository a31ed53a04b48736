//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use arml::harness::benchmarks::GaussianBenchmark;
use arml::harness::{
    diagnose_noise, execute, generate_gaussian_family, load_config, run_experiment, ExperimentConfig,
    GaussianFamilyGen, ProblemSpec, ReweighterSpec, RunOptions,
};
use arml::linalg::linf_distance;
use arml::oracle::{brute_force_optimal_weights, theorem_bound_probe, GaussianFamily};
use arml::params::{Layout, ParamVector, SegmentKind, TaskId};
use arml::random::{RngState, Stream};
use arml::reweight::{matching_gradient, matching_objective, project_simplex, GradientSnapshot, TaskWeights};
use arml::tasks::{
    finite_diff_grad, make_mlp_task, mlp_layout, relative_error, Activation, Dataset, GaussianTask, GaussianTaskSpec,
    LinearRegressionTask, LogisticRegressionTask, TaskModel,
};
use arml::trainer::{injected_noise_std, joint_grad, langevin_step, train, Batches, LrPhase, LrSchedule, Mode, TrainerConfig};

const GRID_RES: f64 = 0.05;
const RECOVERY_LINF: f64 = 0.15;
const RECOVERY_SECONDS: f64 = 60.0;
const KL_GAP: f64 = 0.05;
const LANGEVIN_REL: f64 = 0.05;
const NOISE_STD_TOL: f64 = 1e-12;
const FD_REL: f64 = 1e-5;
const ALPHA_FD_REL: f64 = 1e-8;
const SIMPLEX_TOL: f64 = 1e-9;
const RELEVANT_MIN: f64 = 1.5;
const LOSS_SLACK: f64 = 1e-6;
const SCARCITY_LINF: f64 = 0.2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

struct RecoveryRun {
    label: String,
    linf: f64,
    gap: f64,
    seconds: f64,
}

fn recovery_families() -> Vec<(GaussianFamilyGen, GaussianFamily)> {
    let shapes = [(2, 2, true), (3, 4, false), (4, 6, true), (2, 5, false), (3, 3, true), (4, 8, false)];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(k, dim, isotropic))| {
            let gen = GaussianFamilyGen {
                dim,
                k,
                spread: 4.0,
                isotropic,
                target_grid: GRID_RES,
                seed: 100 + i as u64,
            };
            let fam = generate_gaussian_family(&gen).expect("family").family;
            (gen, fam)
        })
        .collect()
}

fn recovery_runs() -> Vec<RecoveryRun> {
    let bench = GaussianBenchmark::default();
    recovery_families()
        .into_iter()
        .enumerate()
        .map(|(i, (gen, fam))| {
            let cfg = bench.config("recovery", &fam, 200 + i as u64, i as u64);
            let start = Instant::now();
            let (_, result) = execute(&cfg).expect("training");
            let seconds = start.elapsed().as_secs_f64();
            let alpha = result.final_weights();
            let (star, _) = brute_force_optimal_weights(&fam, GRID_RES).expect("oracle");
            let probe = theorem_bound_probe(&fam, alpha, GRID_RES).expect("probe");
            RecoveryRun {
                label: format!("K={} d={}{}", gen.k, gen.dim, if gen.isotropic { "" } else { " rotated" }),
                linf: linf_distance(alpha.as_slice(), star.as_slice()),
                gap: probe.gap,
                seconds,
            }
        })
        .collect()
}

fn criterion_recovery(runs: &[RecoveryRun]) -> Outcome {
    let worst = runs.iter().map(|r| r.linf).fold(0.0, f64::max);
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let pass = runs.len() >= 5 && worst <= RECOVERY_LINF && slowest < RECOVERY_SECONDS;
    let per: Vec<String> = runs.iter().map(|r| format!("{} {:.3}", r.label, r.linf)).collect();
    outcome(
        pass,
        format!(
            "{} families, max L-inf {worst:.4} (tol {RECOVERY_LINF}), slowest {slowest:.1}s (limit {RECOVERY_SECONDS}s) [{}]",
            runs.len(),
            per.join("; ")
        ),
    )
}

fn criterion_bound(runs: &[RecoveryRun]) -> Outcome {
    let worst = runs.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let per: Vec<String> = runs.iter().map(|r| format!("{:.4}", r.gap)).collect();
    outcome(
        worst < KL_GAP,
        format!("max KL gap {worst:.4} nats (tol {KL_GAP}) [{}]", per.join(", ")),
    )
}

fn criterion_langevin() -> Outcome {
    // p^J ∝ N(0, 2σ²I) · N(0, 2σ²I) = N(0, σ²I)
    let (d, sigma, eps, steps, burn) = (20usize, 0.5f64, 1e-3, 200_000usize, 10_000usize);
    let half = GaussianTaskSpec::isotropic(vec![0.0; d], 2.0 * sigma * sigma);
    let main = GaussianTask::new(&half).unwrap();
    let aux: Vec<Box<dyn TaskModel>> = vec![Box::new(GaussianTask::new(&half).unwrap())];
    let alpha = TaskWeights::uniform(1);
    let batches = Batches {
        main: vec![],
        aux: vec![vec![]],
    };
    let mut rng = RngState::for_stream(0, Stream::Noise);
    let mut theta = ParamVector::from_shared(vec![0.0; d]).unwrap();
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0usize);
    let mut replay_err: f64 = 0.0;
    let mut std_err: f64 = 0.0;
    for t in 0..steps {
        let g = joint_grad(&theta, &main, &aux, &alpha, &batches, 0.0).unwrap();
        let mut replay = rng.clone();
        let step = langevin_step(&theta, &g, eps, &mut rng).unwrap();
        std_err = std_err.max((step.noise_std - (2.0 * eps).sqrt()).abs());
        if t < 100 {
            for i in 0..d {
                let eta = step.theta.values()[i] - theta.values()[i] - eps * g.values()[i];
                replay_err = replay_err.max((eta - step.noise_std * replay.standard_normal()).abs());
            }
        }
        theta = step.theta;
        if t >= burn {
            for v in theta.values() {
                sum += v;
                sum_sq += v * v;
                count += 1;
            }
        }
    }
    let mean = sum / count as f64;
    let std = (sum_sq / count as f64 - mean * mean).sqrt();
    let rel = (std - sigma).abs() / sigma;

    // the trainer reports √(2ε_t) under a changing schedule
    let mut cfg = TrainerConfig::new(Mode::Alg2, 400, 1e-3);
    cfg.lr_schedule = LrSchedule(vec![LrPhase { start: 1, lr: 1e-3 }, LrPhase { start: 201, lr: 2.5e-4 }]);
    let mut uniform = arml::reweight::Uniform;
    let r = train(&cfg, &main, &aux, &mut uniform, ParamVector::from_shared(vec![0.0; d]).unwrap()).unwrap();
    let sched_err = r
        .injected_noise_std
        .iter()
        .enumerate()
        .map(|(i, s)| (s - injected_noise_std(cfg.lr_schedule.lr_at(i + 1))).abs())
        .fold(0.0, f64::max);
    let worst_noise = std_err.max(sched_err);
    outcome(
        rel <= LANGEVIN_REL && worst_noise <= NOISE_STD_TOL && replay_err <= NOISE_STD_TOL,
        format!(
            "marginal std {std:.4} vs {sigma} (rel err {rel:.4}, tol {LANGEVIN_REL}); |std - sqrt(2 eps)| max {worst_noise:.1e}, noise replay max {replay_err:.1e} (tol {NOISE_STD_TOL:.0e})"
        ),
    )
}

fn random_dataset(rng: &mut RngState, n: usize, p: usize, binary: bool) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| rng.gaussian_vector(p, 0.0, 1.0).unwrap()).collect();
    let ys: Vec<f64> = (0..n)
        .map(|_| {
            let z = rng.standard_normal();
            if binary {
                (z > 0.0) as u8 as f64
            } else {
                z
            }
        })
        .collect();
    Dataset::from_rows(&rows, &ys).unwrap()
}

fn fd_worst(task: &dyn TaskModel, layout: std::sync::Arc<Layout>, rng: &mut RngState, probes: usize) -> f64 {
    let n = task.n_examples();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let theta = ParamVector::new(rng.gaussian_vector(layout.dim(), 0.0, 0.7).unwrap(), layout.clone()).unwrap();
        let batch = match n {
            Some(n) => {
                let size = 1 + (rng.uniform() * n as f64) as usize;
                rng.batch(n, size)
            }
            None => vec![],
        };
        let analytic = task.grad_log_likelihood(&theta, &batch).unwrap();
        let numeric = finite_diff_grad(task, &theta, &batch, 1e-5).unwrap();
        worst = worst.max(relative_error(analytic.values(), numeric.values()));
    }
    worst
}

fn criterion_gradients() -> Outcome {
    let probes = 100;
    let mut rng = RngState::new(17, 0);
    let mut rows = Vec::new();

    let mut a = nalgebra::DMatrix::from_fn(4, 4, |_, _| rng.standard_normal());
    a = &a * a.transpose() + nalgebra::DMatrix::identity(4, 4);
    let g = GaussianTask::new(&GaussianTaskSpec::new(vec![0.5, -1.0, 2.0, 0.0], a)).unwrap();
    rows.push(("gaussian", fd_worst(&g, std::sync::Arc::new(Layout::shared_only(4).unwrap()), &mut rng, probes)));

    let with_head = std::sync::Arc::new(
        Layout::from_parts(vec![("shared", SegmentKind::Shared, 3), ("head", SegmentKind::Head(TaskId(0)), 1)]).unwrap(),
    );
    let lin = LinearRegressionTask::new(random_dataset(&mut rng, 40, 3, false), 0.5, Some(TaskId(0))).unwrap();
    rows.push(("linear", fd_worst(&lin, with_head.clone(), &mut rng, probes)));
    let log = LogisticRegressionTask::new(random_dataset(&mut rng, 40, 3, true), Some(TaskId(0))).unwrap();
    rows.push(("logistic", fd_worst(&log, with_head, &mut rng, probes)));

    let mlp_shared = make_mlp_task(&[3, 5, 4, 1], Activation::Tanh, random_dataset(&mut rng, 30, 3, false), None, 0.5).unwrap();
    let shared_layout = std::sync::Arc::new(Layout::shared_only(5 * 4 + 4 * 6 + 5).unwrap());
    rows.push(("mlp", fd_worst(&mlp_shared, shared_layout, &mut rng, probes)));

    let head_layout = mlp_layout(3, &[5], &[(TaskId(0), 1), (TaskId(1), 1)]).unwrap();
    let mlp_head = make_mlp_task(&[3, 5, 1], Activation::Tanh, random_dataset(&mut rng, 30, 3, false), Some(TaskId(1)), 0.5).unwrap();
    rows.push(("mlp+head", fd_worst(&mlp_head, head_layout, &mut rng, probes)));

    let mut alpha_worst: f64 = 0.0;
    for _ in 0..probes {
        let k = 1 + (rng.uniform() * 4.0) as usize;
        let d = 1 + (rng.uniform() * 8.0) as usize;
        let snap = GradientSnapshot::new(
            rng.gaussian_vector(d, 0.0, 1.0).unwrap(),
            (0..k).map(|_| rng.gaussian_vector(d, 0.0, 1.0).unwrap()).collect(),
            0,
        )
        .unwrap();
        let alpha = rng.gaussian_vector(k, 1.0, 0.5).unwrap();
        let analytic = matching_gradient(&snap, &alpha).unwrap();
        let h = 1e-4;
        let numeric: Vec<f64> = (0..k)
            .map(|i| {
                let mut up = alpha.clone();
                let mut down = alpha.clone();
                up[i] += h;
                down[i] -= h;
                (matching_objective(&snap, &up).unwrap() - matching_objective(&snap, &down).unwrap()) / (2.0 * h)
            })
            .collect();
        alpha_worst = alpha_worst.max(relative_error(&analytic, &numeric));
    }
    let task_worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let per: Vec<String> = rows.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(
        task_worst <= FD_REL && alpha_worst <= ALPHA_FD_REL,
        format!(
            "{probes} probes per model, max rel err {task_worst:.1e} (tol {FD_REL:.0e}) [{}]; weight gradient {alpha_worst:.1e} (tol {ALPHA_FD_REL:.0e})",
            per.join(", ")
        ),
    )
}

/// Best feasible point among all supports `S`: `x_S = v_S - τ_S`, zero
/// elsewhere.
fn active_set_projection(v: &[f64], total: f64) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (idx.iter().map(|&i| v[i]).sum::<f64>() - total) / idx.len() as f64;
        let mut x = vec![0.0; n];
        let mut ok = true;
        for &i in &idx {
            x[i] = v[i] - tau;
            if x[i] < 0.0 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, x));
        }
    }
    best.expect("some support is feasible").1
}

fn criterion_simplex() -> Outcome {
    let mut rng = RngState::new(23, 0);
    let (mut worst, mut idem_fail, mut perm_fail) = (0.0f64, 0usize, 0usize);
    let instances = 1000;
    for _ in 0..instances {
        let n = 1 + (rng.uniform() * 6.0) as usize;
        let v = rng.gaussian_vector(n, 0.5, 2.0).unwrap();
        let total = n as f64;
        let p = project_simplex(&v, total).unwrap();
        worst = worst.max(linf_distance(&p, &active_set_projection(&v, total)));
        if project_simplex(&p, total).unwrap() != p {
            idem_fail += 1;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            perm.swap(i, j);
        }
        let pv: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let pp = project_simplex(&pv, total).unwrap();
        if perm.iter().enumerate().any(|(j, &i)| pp[j] != p[i]) {
            perm_fail += 1;
        }
    }
    outcome(
        worst <= SIMPLEX_TOL && idem_fail == 0 && perm_fail == 0,
        format!(
            "{instances} instances, max deviation from active-set oracle {worst:.1e} (tol {SIMPLEX_TOL:.0e}); idempotence failures {idem_fail}, permutation failures {perm_fail} (exact)"
        ),
    )
}

fn reseeded(base: &ExperimentConfig, seed: u64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.trainer.seed = seed;
    if let ProblemSpec::Regression(r) = &mut cfg.problem {
        r.data.seed = seed;
    }
    cfg
}

fn criterion_irrelevant() -> Outcome {
    let base = load_config(config_path("relevant_irrelevant.json")).expect("shipped config");
    let mut pass = true;
    let mut per = Vec::new();
    for seed in 0..3 {
        let cfg = reseeded(&base, seed);
        let (p, arml_run) = execute(&cfg).unwrap();
        let arml_loss = p.evaluation_loss(&arml_run.final_theta).unwrap();
        let mut uni = cfg.clone();
        uni.reweighter = ReweighterSpec::Uniform;
        let (p, uni_run) = execute(&uni).unwrap();
        let uni_loss = p.evaluation_loss(&uni_run.final_theta).unwrap();
        let relevant = arml_run.final_weights()[0];
        pass &= relevant >= RELEVANT_MIN && arml_loss <= uni_loss + LOSS_SLACK;
        per.push(format!("seed {seed}: alpha_rel {relevant:.3}, loss {arml_loss:.4} vs uniform {uni_loss:.4}"));
    }
    outcome(
        pass,
        format!("relevant weight >= {RELEVANT_MIN}, loss <= uniform + {LOSS_SLACK:.0e} [{}]", per.join("; ")),
    )
}

fn criterion_scarcity() -> Outcome {
    let shapes = [(3usize, 2usize, true, 7u64), (4, 6, true, 102)];
    let mut worst: f64 = 0.0;
    let mut per = Vec::new();
    for (k, dim, isotropic, seed) in shapes {
        let gen = GaussianFamilyGen {
            dim,
            k,
            spread: 4.0,
            isotropic,
            target_grid: GRID_RES,
            seed,
        };
        let fam = generate_gaussian_family(&gen).unwrap().family;
        let alphas: Vec<TaskWeights> = [10usize, 100, 1000]
            .iter()
            .map(|&n| {
                let bench = GaussianBenchmark {
                    main_n: n,
                    ..Default::default()
                };
                execute(&bench.config("scarcity", &fam, 5, 1)).unwrap().1.final_weights().clone()
            })
            .collect();
        let mut fam_worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                fam_worst = fam_worst.max(linf_distance(alphas[i].as_slice(), alphas[j].as_slice()));
            }
        }
        worst = worst.max(fam_worst);
        per.push(format!("K={k} d={dim} {fam_worst:.3}"));
    }
    outcome(
        worst <= SCARCITY_LINF,
        format!("n in {{10, 100, 1000}}, max pairwise L-inf {worst:.4} (tol {SCARCITY_LINF}) [{}]", per.join("; ")),
    )
}

fn criterion_noise() -> Outcome {
    let base = load_config(config_path("relevant_irrelevant.json")).expect("shipped config");
    let mut pass = true;
    let mut per = Vec::new();
    for seed in 0..3 {
        let cfg = reseeded(&base, seed);
        let eps = cfg.diagnostics.lr.unwrap_or_else(|| cfg.trainer.lr_schedule.lr_at(1));
        let batches_ok = cfg.trainer.batch_size_main >= 64 && cfg.trainer.batch_size_aux >= 64 && eps <= 1e-3;
        let r = diagnose_noise(&cfg).unwrap();
        pass &= batches_ok && r.grad_noise_std < r.injected_noise_std;
        per.push(format!(
            "seed {seed}: {:.3e} < {:.3e} (ratio {:.3})",
            r.grad_noise_std, r.injected_noise_std, r.ratio
        ));
    }
    outcome(
        pass,
        format!("batch 64, eps {:.0e}: grad noise < injected [{}]", base.trainer.lr_schedule.lr_at(1), per.join("; ")),
    )
}

fn criterion_determinism() -> Outcome {
    let regression = load_config(config_path("relevant_irrelevant.json")).unwrap();
    let (_, fam) = recovery_families().remove(0);
    let gaussian = GaussianBenchmark::default().config("determinism_gaussian", &fam, 200, 0);
    let mut pass = true;
    let mut per = Vec::new();
    for cfg in [regression, gaussian] {
        let bytes: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let opts = RunOptions {
                    out_dir: Some(dir.path().to_path_buf()),
                    ..Default::default()
                };
                let out = run_experiment(&cfg, &opts).unwrap();
                std::fs::read(out.run_dir.join("metrics.csv")).unwrap()
            })
            .collect();
        let same = bytes[0] == bytes[1];
        pass &= same;
        per.push(format!("{} {} bytes {}", cfg.name, bytes[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, per.join("; "))
}

fn main() {
    let started = Instant::now();
    let runs = recovery_runs();
    let results = [
        ("gaussian weight recovery", criterion_recovery(&runs)),
        ("KL gap to lattice optimum", criterion_bound(&runs)),
        ("langevin stationarity", criterion_langevin()),
        ("gradient correctness", criterion_gradients()),
        ("simplex projection", criterion_simplex()),
        ("irrelevant-task suppression", criterion_irrelevant()),
        ("scarcity robustness", criterion_scarcity()),
        ("gradient noise vs injected noise", criterion_noise()),
        ("determinism", criterion_determinism()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("[{}] {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += (!o.pass) as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
