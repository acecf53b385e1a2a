//! Production numerics against the brute-force implementations in `gptemper-oracles`.

use gptemper::benchmarks::{
    highdim100_fn, quadratic4_fn, scalability_fn, torsion_frequency, SyntheticProblem,
};
use gptemper::predict::Provenance;
use gptemper::rng::substream;
use gptemper::smc::{ess, next_gamma_adaptive};
use gptemper::{
    log_likelihood, predict, Dataset, HyperParams, KernelForm, Matrix, PosteriorEnsemble,
};
use gptemper_oracles as oracle;
use proptest::prelude::*;
use rand::Rng;

fn random_problem(seed: u64, n: usize, d: usize, m: usize) -> (Dataset, HyperParams) {
    let mut rng = substream(seed, 0, 0);
    let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = (0..n * m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let ds = Dataset::normalized(Matrix::new(n, d, x).unwrap(), Matrix::new(n, m, y).unwrap()).unwrap();
    let theta = (0..m * (d + 2) + 1).map(|_| rng.random_range(0.2..5.0)).collect();
    (ds, HyperParams::new(d, m, theta).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn likelihood_matches_dense(seed in 0u64..10_000, n in 2usize..7, d in 1usize..4, m in 1usize..3, additive in any::<bool>()) {
        let form = if additive { KernelForm::AdditiveSum } else { KernelForm::ExponentiatedSum };
        let (ds, p) = random_problem(seed, n, d, m);
        let fast = log_likelihood(&ds, &p, form, 1e-10).unwrap();
        let slow = oracle::dense_loglik(&ds, &p, form).unwrap();
        prop_assert!(rel(fast, slow) < 1e-9, "{fast} vs {slow}");
    }

    #[test]
    fn prediction_matches_dense(seed in 0u64..10_000, n in 2usize..6, d in 1usize..3) {
        let (ds, p) = random_problem(seed, n, d, 1);
        let mut rng = substream(seed, 9, 0);
        let t: Vec<f64> = (0..3 * d).map(|_| rng.random_range(-0.2..1.2)).collect();
        let test = Matrix::new(3, d, t).unwrap();
        let ens = PosteriorEnsemble::uniform(
            p.layout(),
            vec![p.values().to_vec()],
            Provenance { engine: "fixed".into(), seed, schedule: String::new() },
        ).unwrap();
        let got = predict(&ds, &ens, &test, KernelForm::ExponentiatedSum, 1e-10).unwrap();
        let rows = |mat: &Matrix| mat.row_iter().map(<[f64]>::to_vec).collect::<Vec<_>>();
        let (mean, var) = oracle::dense_predict(
            &rows(ds.inputs()),
            &ds.output_column(0),
            &rows(&test),
            p.values(),
            KernelForm::ExponentiatedSum,
        ).unwrap();
        for i in 0..3 {
            prop_assert!(rel(got.mean.get(i, 0), mean[i]) < 1e-9);
            prop_assert!(rel(got.variance.get(i, 0), var[i]) < 1e-9);
        }
    }

    #[test]
    fn ess_matches_direct(lw in prop::collection::vec(-40.0f64..5.0, 1..80)) {
        let fast = ess(&lw).unwrap();
        prop_assert!((fast - oracle::ess_direct(&lw)).abs() < 1e-9 * lw.len() as f64);
    }

    #[test]
    fn adaptive_gamma_matches_scan(seed in 0u64..10_000, r in 0.3f64..0.95) {
        let mut rng = substream(seed, 3, 0);
        let lw: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..0.0)).collect();
        let ll: Vec<f64> = (0..40).map(|_| rng.random_range(-60.0..0.0)).collect();
        let g = next_gamma_adaptive(&lw, &ll, 0.01, r).unwrap();
        let scan = oracle::gamma_scan(&lw, &ll, 0.01, r, 20_000);
        prop_assert!((g - scan).abs() < 1e-4, "{g} vs {scan}");
    }
}

#[test]
fn synthetic_functions_match_references() {
    let mut rng = substream(5, 0, 0);
    for name in SyntheticProblem::NAMES {
        let p = SyntheticProblem::by_name(name).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = p.input_box.iter().map(|(a, b)| rng.random_range(*a..*b)).collect();
            let (got, want) = match name {
                "scalability" => (scalability_fn(&x), oracle::scalability_reference(&x)),
                "quadratic4" => (quadratic4_fn(&x), oracle::quadratic4_reference(&x)),
                "highdim100" => (highdim100_fn(&x), oracle::highdim100_reference(&x)),
                _ => match torsion_frequency(&x) {
                    Ok(f) => (f, oracle::torsion_reference(&x)),
                    Err(_) => continue,
                },
            };
            assert!(rel(got, want) < 1e-10, "{name}: {got} vs {want}");
        }
    }
}
