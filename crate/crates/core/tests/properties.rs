use arml::harness::{parse_config, read_metrics_csv, run_experiment, RunOptions};
use arml::oracle::{
    fisher_divergence_gaussian, kl_gaussian, simplex_lattice, surrogate_prior, GaussianDist, GaussianFamily,
};
use arml::reweight::{arml_objective, arml_update, project_simplex, GradientSnapshot, TaskWeights};
use arml::tasks::GaussianTaskSpec;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_len)
}

fn snapshot(max_k: usize, max_d: usize) -> impl Strategy<Value = GradientSnapshot> {
    (1..=max_k, 1..=max_d).prop_flat_map(|(k, d)| {
        (
            prop::collection::vec(-3.0f64..3.0, d),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), k),
        )
            .prop_map(|(main, aux)| GradientSnapshot::new(main, aux, 0).unwrap())
    })
}

fn weights(k: usize) -> impl Strategy<Value = TaskWeights> {
    prop::collection::vec(0.0f64..1.0, k).prop_map(move |raw| {
        let k = raw.len() as f64;
        TaskWeights::new(project_simplex(&raw, k).unwrap()).unwrap()
    })
}

fn spd(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |raw| {
        let a = DMatrix::from_vec(d, d, raw);
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    })
}

fn family(k: usize, d: usize) -> impl Strategy<Value = GaussianFamily> {
    (prop::collection::vec(prop::collection::vec(-4.0f64..4.0, d), k), spd(d), prop::collection::vec(-2.0f64..2.0, d), spd(d))
        .prop_map(|(centers, sigma, mean, cov)| {
            let specs = centers.into_iter().map(|c| GaussianTaskSpec::new(c, sigma.clone())).collect();
            GaussianFamily::new(specs, GaussianDist::new(mean, cov).unwrap()).unwrap()
        })
}

proptest! {
    #[test]
    fn projection_lands_on_the_simplex(v in vector(8), total in 0.1f64..10.0) {
        let p = project_simplex(&v, total).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - total).abs() <= 1e-9 * total.max(1.0));
        prop_assert_eq!(project_simplex(&p, total).unwrap(), p.clone());
    }

    #[test]
    fn projection_is_the_nearest_point(v in vector(6), q in prop::collection::vec(0.0f64..1.0, 6)) {
        let total = v.len() as f64;
        let p = project_simplex(&v, total).unwrap();
        let q = project_simplex(&q[..v.len()], total).unwrap();
        let dist = |x: &[f64]| x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        prop_assert!(dist(&p) <= dist(&q) + 1e-9);
    }

    #[test]
    fn projection_commutes_with_shifts(v in vector(6), c in -5.0f64..5.0) {
        let total = v.len() as f64;
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = project_simplex(&v, total).unwrap();
        let b = project_simplex(&shifted, total).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn lattice_argmin_ignores_gradient_scale(s in snapshot(3, 5), c in 0.01f64..100.0) {
        let lattice = simplex_lattice(s.k(), 0.1).unwrap();
        let argmin = |snap: &GradientSnapshot| {
            lattice
                .iter()
                .map(|a| arml_objective(snap, a).unwrap())
                .enumerate()
                .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
        };
        let (i, vi) = argmin(&s);
        let (j, _) = argmin(&s.scaled(c));
        if i != j {
            // only a near-tie may flip
            let vj = arml_objective(&s, &lattice[j]).unwrap();
            prop_assert!((vj - vi).abs() <= 1e-9 * vi.max(1.0));
        }
    }

    #[test]
    fn small_steps_descend(s in snapshot(4, 6), frac in 0.01f64..0.99) {
        let k = s.k();
        let g = DMatrix::from_fn(s.dim(), k, |r, c| s.g_aux[c][r]);
        let lmax = (g.transpose() * &g).symmetric_eigenvalues().max();
        prop_assume!(lmax > 1e-9);
        let beta = frac / (2.0 * lmax);
        let mut alpha = TaskWeights::uniform(k);
        let mut prev = arml_objective(&s, &alpha).unwrap();
        for _ in 0..20 {
            alpha = arml_update(&alpha, &s, beta).unwrap();
            let cur = arml_objective(&s, &alpha).unwrap();
            prop_assert!(cur <= prev + 1e-10 * prev.max(1.0), "{} > {}", cur, prev);
            prev = cur;
        }
    }

    #[test]
    fn surrogate_is_permutation_equivariant(
        (fam, alpha, perm) in (2usize..=4, 1usize..=3).prop_flat_map(|(k, d)| {
            (family(k, d), weights(k), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let specs: Vec<GaussianTaskSpec> = perm.iter().map(|&i| fam.specs()[i].clone()).collect();
        let permuted = GaussianFamily::new(specs, fam.p_star().clone()).unwrap();
        let palpha = TaskWeights::new(perm.iter().map(|&i| alpha.as_slice()[i]).collect()).unwrap();
        let a = surrogate_prior(&fam, &alpha).unwrap();
        let b = surrogate_prior(&permuted, &palpha).unwrap();
        for (x, y) in a.mean().iter().zip(b.mean().iter()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!((a.covariance() - b.covariance()).amax() <= 1e-12);
    }

    #[test]
    fn divergences_are_nonnegative(
        (fam, alpha) in (1usize..=3, 1usize..=3).prop_flat_map(|(k, d)| (family(k, d), weights(k)))
    ) {
        let q = surrogate_prior(&fam, &alpha).unwrap();
        prop_assert!(kl_gaussian(fam.p_star(), &q).unwrap() >= 0.0);
        prop_assert!(fisher_divergence_gaussian(fam.p_star(), &q).unwrap() >= 0.0);
        prop_assert!(kl_gaussian(&q, &q).unwrap().abs() <= 1e-10);
        prop_assert!(fisher_divergence_gaussian(&q, &q).unwrap().abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn persisted_weights_sum_to_k(seed in 0u64..1000, k in 1usize..=4, beta_exp in -6.0f64..-3.0) {
        let relevance: Vec<f64> = (0..k).map(|i| 1.0 - i as f64 / k as f64).collect();
        let text = serde_json::json!({
            "name": "sums",
            "trainer": {
                "mode": "alg2",
                "iterations": 60,
                "lr_schedule": [{"start": 1, "lr": 1e-4}],
                "weight_lr": 10f64.powf(beta_exp),
                "seed": seed
            },
            "problem": {
                "kind": "regression",
                "data": {"input_dim": 3, "n_main": 8, "n_aux": 40, "n_val": 20, "relevance": relevance, "seed": seed},
                "model": {"kind": "linear"}
            }
        })
        .to_string();
        let cfg = parse_config(&text, std::path::Path::new("inline.json")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        let out = run_experiment(&cfg, &opts).unwrap();
        let rows = read_metrics_csv(out.run_dir.join("metrics.csv")).unwrap();
        prop_assert_eq!(rows.len(), 60);
        for r in rows {
            prop_assert!(r.alpha.iter().all(|&a| a >= 0.0));
            prop_assert!((r.alpha.iter().sum::<f64>() - k as f64).abs() <= 1e-9);
        }
    }
}
