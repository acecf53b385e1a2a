use gptemper::Engine;
use gptemper_demo::{curve_for, fit_points, FitOptions};

fn points() -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..15).map(|i| i as f64 * 0.6).collect();
    let ys = xs.iter().map(|x| x.sin()).collect();
    (xs, ys)
}

fn opts(engine: Engine) -> FitOptions {
    FitOptions {
        engine,
        particles: 16,
        grid: 5,
        ess_reduction: 0.0,
        steps_per_gamma: 1,
        mcmc_steps: 600,
        seed: 4,
        points: 50,
    }
}

#[test]
fn manual_curve_passes_near_low_noise_data() {
    let (xs, ys) = points();
    let c = curve_for(&xs, &ys, [2.0, 1.0, 1e4, 1e4], 57).unwrap();
    assert_eq!(c.x.len(), 57);
    assert!(c.x[0] < 0.0 && *c.x.last().unwrap() > 8.4);
    assert!(c.variance.iter().all(|v| *v > 0.0));
    // x = 0.6 * 5 lies on the grid only approximately, so compare against the nearest node
    let i = c.x.iter().enumerate().min_by(|a, b| (a.1 - 3.0).abs().total_cmp(&(b.1 - 3.0).abs())).unwrap().0;
    assert!((c.mean[i] - c.x[i].sin()).abs() < 0.1);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(curve_for(&[0.0, 1.0], &[1.0], [1.0; 4], 10).is_err());
    assert!(curve_for(&[0.0, 1.0], &[1.0, 2.0], [-1.0, 1.0, 1.0, 1.0], 10).is_err());
}

#[test]
fn both_engines_fit() {
    let (xs, ys) = points();
    let a = fit_points(&xs, &ys, &opts(Engine::Asmc)).unwrap();
    let m = fit_points(&xs, &ys, &opts(Engine::Mcmc)).unwrap();
    assert_eq!(a.samples, 16);
    assert_eq!(a.parameter_names.len(), 4);
    assert_eq!(a.curve.mean.len(), 50);
    assert!(a.trace.iter().all(|r| r.ess.is_some()));
    assert!(m.trace.iter().all(|r| r.ess.is_none()));
    assert!(a.per_worker_factorizations > 0 && m.per_worker_factorizations > a.per_worker_factorizations);
    let json = serde_json::to_value(&a).unwrap();
    assert!(json["curve"]["variance"].is_array());
}

#[test]
fn adaptive_schedule_ends_at_one() {
    let (xs, ys) = points();
    let f = fit_points(&xs, &ys, &FitOptions { ess_reduction: 0.5, ..opts(Engine::Asmc) }).unwrap();
    assert_eq!(f.trace.last().unwrap().step_or_gamma, 1.0);
}
