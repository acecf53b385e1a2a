//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Two operations are exported: drawing the GP predictive for hand-picked
//! hyperparameters, and fitting the hyperparameters with either engine. Both take
//! 1-D points in page units and return JSON.

use gptemper::predict::{PosteriorEnsemble, Provenance};
use gptemper::{
    predict, train, Dataset, Engine, HyperParams, KernelForm, Matrix, PriorSpec, RunConfig,
    ScheduleSpec,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct TraceStep {
    pub step_or_gamma: f64,
    pub ess: Option<f64>,
    pub log_target_mean: f64,
    pub factorizations: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct Fit {
    pub engine: String,
    pub parameter_names: Vec<String>,
    pub posterior_mean: Vec<f64>,
    pub samples: usize,
    pub trace: Vec<TraceStep>,
    pub total_factorizations: u64,
    pub per_worker_factorizations: u64,
    pub curve: Curve,
}

fn dataset(xs: &[f64], ys: &[f64]) -> gptemper::Result<Dataset> {
    if xs.len() != ys.len() {
        return Err(gptemper::Error::Shape(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    Dataset::from_raw(
        Matrix::new(xs.len(), 1, xs.to_vec())?,
        Matrix::new(ys.len(), 1, ys.to_vec())?,
        vec!["x".into()],
        vec!["y".into()],
    )
}

fn grid(xs: &[f64], points: usize) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi - lo);
    let (a, b) = (lo - pad, hi + pad);
    let n = points.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn curve(ds: &Dataset, ensemble: &PosteriorEnsemble, xs: &[f64], points: usize) -> gptemper::Result<Curve> {
    let gx = grid(xs, points);
    let raw = Matrix::new(gx.len(), 1, gx.clone())?;
    let test = ds.normalization().normalize_inputs(&raw)?;
    let p = predict(ds, ensemble, &test, KernelForm::ExponentiatedSum, 1e-10)?;
    Ok(Curve {
        x: gx,
        mean: p.mean.column(0),
        variance: p.variance.column(0),
    })
}

/// Predictive curve for one hyperparameter setting (normalized units).
pub fn curve_for(
    xs: &[f64],
    ys: &[f64],
    theta: [f64; 4],
    points: usize,
) -> gptemper::Result<Curve> {
    let ds = dataset(xs, ys)?;
    let params = HyperParams::new(1, 1, theta.to_vec())?;
    let ensemble = PosteriorEnsemble::uniform(
        params.layout(),
        vec![params.into_values()],
        Provenance {
            engine: "manual".into(),
            seed: 0,
            schedule: String::new(),
        },
    )?;
    curve(&ds, &ensemble, xs, points)
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub engine: Engine,
    pub particles: usize,
    pub grid: usize,
    /// Use an adaptive schedule with this ESS reduction when in (0, 1).
    pub ess_reduction: f64,
    pub steps_per_gamma: usize,
    pub mcmc_steps: usize,
    pub seed: u64,
    pub points: usize,
}

pub fn fit_points(xs: &[f64], ys: &[f64], opts: &FitOptions) -> gptemper::Result<Fit> {
    let ds = dataset(xs, ys)?;
    let schedule = if opts.ess_reduction > 0.0 && opts.ess_reduction < 1.0 {
        ScheduleSpec::Adaptive {
            ess_reduction: opts.ess_reduction,
        }
    } else {
        ScheduleSpec::Grid { count: opts.grid }
    };
    let config = RunConfig {
        engine: opts.engine,
        particles: opts.particles,
        steps_per_gamma: opts.steps_per_gamma,
        schedule,
        mcmc_total_steps: opts.mcmc_steps,
        mcmc_init_steps: opts.mcmc_steps / 6,
        seed: opts.seed,
        ..RunConfig::default()
    };
    let out = train(&ds, None, &config, &PriorSpec::default_for(1, 1))?;
    let thin = out.ensemble.thinned(100);
    Ok(Fit {
        engine: opts.engine.to_string(),
        parameter_names: out.ensemble.layout().names(),
        posterior_mean: out.ensemble.mean(),
        samples: out.ensemble.len(),
        trace: out
            .trace
            .iter()
            .map(|r| TraceStep {
                step_or_gamma: r.step_or_gamma,
                ess: r.ess,
                log_target_mean: r.log_target_mean,
                factorizations: r.factorizations,
                wall_time_s: r.wall_time_s,
            })
            .collect(),
        total_factorizations: out.total_factorizations,
        per_worker_factorizations: out.per_worker_factorizations,
        curve: curve(&ds, &thin, xs, opts.points)?,
    })
}

fn js<T: Serialize>(r: gptemper::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON `{x, mean, variance}` of the predictive under `θ = (β, λ_z, λ_s, λ_o)`.
#[wasm_bindgen(js_name = predictCurve)]
#[allow(clippy::too_many_arguments)]
pub fn predict_curve(
    xs: &[f64],
    ys: &[f64],
    beta: f64,
    lambda_z: f64,
    lambda_s: f64,
    lambda_o: f64,
    points: usize,
) -> Result<String, JsError> {
    js(curve_for(xs, ys, [beta, lambda_z, lambda_s, lambda_o], points))
}

/// JSON fit summary: posterior means, per-level trace and the averaged predictive.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fit(
    xs: &[f64],
    ys: &[f64],
    engine: &str,
    particles: usize,
    grid: usize,
    ess_reduction: f64,
    steps_per_gamma: usize,
    mcmc_steps: usize,
    seed: u32,
    points: usize,
) -> Result<String, JsError> {
    let engine: Engine = engine.parse().map_err(|e: gptemper::Error| JsError::new(&e.to_string()))?;
    js(fit_points(
        xs,
        ys,
        &FitOptions {
            engine,
            particles,
            grid,
            ess_reduction,
            steps_per_gamma,
            mcmc_steps,
            seed: u64::from(seed),
            points,
        },
    ))
}
