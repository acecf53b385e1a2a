//! Synthetic test functions, Latin-hypercube designs and the engine comparison harness.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{train, Engine, RunConfig};
use crate::data::{default_names, Dataset};
use crate::error::{Error, Result};
use crate::inference::PriorSpec;
use crate::matrix::Matrix;
use crate::rng::substream;
use crate::trace::TraceRow;

/// Gravitational acceleration in in/s², matching the inch-pound units of the torsion problem.
pub const GRAVITY_IN_PER_S2: f64 = 386.09;

/// `3 sin(x₁) x₂ + cos(x₃) sin(x₄) + sin(x₅) sin(x₆) + sin(x₇) + sin(x₈) + 7 x₉ + 6 x₁₀`.
pub fn scalability_fn(x: &[f64]) -> f64 {
    assert_eq!(x.len(), 10, "scalability function takes 10 inputs");
    3.0 * x[0].sin() * x[1]
        + x[2].cos() * x[3].sin()
        + x[4].sin() * x[5].sin()
        + x[6].sin()
        + x[7].sin()
        + 7.0 * x[8]
        + 6.0 * x[9]
}

/// Inputs of the three-shaft, two-disk torsional system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionInputs {
    pub shaft_diameter: [f64; 3],
    pub shaft_length: [f64; 3],
    pub shaft_rigidity: [f64; 3],
    /// Carried as inputs but not used by the frequency formula.
    pub shaft_density: [f64; 3],
    pub disk_diameter: [f64; 2],
    pub disk_thickness: [f64; 2],
    pub disk_density: [f64; 2],
}

impl TorsionInputs {
    /// Order: d₁..d₃, L₁..L₃, G₁..G₃, shaft densities, D₁ D₂, t₁ t₂, ρ₁ ρ₂.
    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), 18, "torsion function takes 18 inputs");
        let a3 = |i: usize| [x[i], x[i + 1], x[i + 2]];
        let a2 = |i: usize| [x[i], x[i + 1]];
        Self {
            shaft_diameter: a3(0),
            shaft_length: a3(3),
            shaft_rigidity: a3(6),
            shaft_density: a3(9),
            disk_diameter: a2(12),
            disk_thickness: a2(14),
            disk_density: a2(16),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(18);
        v.extend_from_slice(&self.shaft_diameter);
        v.extend_from_slice(&self.shaft_length);
        v.extend_from_slice(&self.shaft_rigidity);
        v.extend_from_slice(&self.shaft_density);
        v.extend_from_slice(&self.disk_diameter);
        v.extend_from_slice(&self.disk_thickness);
        v.extend_from_slice(&self.disk_density);
        v
    }

    /// Shaft stiffnesses `K_i = π G_i d_i / (32 L_i)`.
    pub fn stiffness(&self) -> [f64; 3] {
        std::array::from_fn(|i| {
            PI * self.shaft_rigidity[i] * self.shaft_diameter[i] / (32.0 * self.shaft_length[i])
        })
    }

    /// Disk inertias `J_j = ½ M_j (D_j / 2)²` with `M_j = π t_j ρ_j D_j / (4 g)`.
    pub fn inertia(&self) -> [f64; 2] {
        std::array::from_fn(|j| {
            let mass = PI * self.disk_thickness[j] * self.disk_density[j] * self.disk_diameter[j]
                / (4.0 * GRAVITY_IN_PER_S2);
            0.5 * mass * (self.disk_diameter[j] / 2.0).powi(2)
        })
    }
}

/// Higher natural frequency of the torsional system, with the stiffness and mass
/// relations taken exactly as stated (linear in `d_i` and `D_j`).
pub fn torsion_frequency(x: &[f64]) -> Result<f64> {
    if x.len() != 18 {
        return Err(Error::Shape(format!("torsion function takes 18 inputs, got {}", x.len())));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("torsion inputs must be positive".into()));
    }
    let inputs = TorsionInputs::from_slice(x);
    let [k1, k2, k3] = inputs.stiffness();
    let [j1, j2] = inputs.inertia();
    let a = 1.0;
    let b = -((k1 + k2) / j1 + (k2 + k3) / j2);
    let c = (k1 * k2 + k2 * k3 + k3 * k1) / (j1 * j2);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::ComplexRoot(disc));
    }
    Ok(((-b + disc.sqrt()) / (2.0 * a)).sqrt() / (2.0 * PI))
}

fn torsion_fn(x: &[f64]) -> f64 {
    torsion_frequency(x).expect("torsion box keeps inputs positive")
}

/// Four-input quadratic `xᵀ A x + bᵀ x + c`, `A = diag(1, 2, 3, 4)` with 0.5 off the diagonal,
/// `b = (1, -1, 1, -1)`, `c = 0.5`.
pub fn quadratic4_fn(x: &[f64]) -> f64 {
    assert_eq!(x.len(), 4, "quadratic takes 4 inputs");
    const B: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
    let mut q = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let a = if i == j { (i + 1) as f64 } else { 0.5 };
            q += x[i] * a * x[j];
        }
    }
    q + B.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + 0.5
}

/// `Σ_{l=1}^{50} sin(x_{2l-1}) x_{2l} + Σ_{l=1}^{100} l x_l / 100`.
pub fn highdim100_fn(x: &[f64]) -> f64 {
    assert_eq!(x.len(), 100, "high-dimensional function takes 100 inputs");
    let pairs: f64 = x.chunks_exact(2).map(|p| p[0].sin() * p[1]).sum();
    let linear: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v / 100.0)
        .sum();
    pairs + linear
}

/// A named single-output test function with its input box.
#[derive(Clone, Debug)]
pub struct SyntheticProblem {
    pub name: &'static str,
    pub d: usize,
    pub m: usize,
    pub evaluator: fn(&[f64]) -> f64,
    pub input_box: Vec<(f64, f64)>,
    pub noise_sd: f64,
}

impl SyntheticProblem {
    pub const NAMES: [&'static str; 4] = ["scalability", "torsion", "quadratic4", "highdim100"];

    pub fn by_name(name: &str) -> Result<Self> {
        let (d, evaluator, input_box): (usize, fn(&[f64]) -> f64, Vec<(f64, f64)>) = match name {
            "scalability" => (10, scalability_fn, vec![(0.0, 1.0); 10]),
            "torsion" => {
                let mut b = Vec::with_capacity(18);
                b.extend([(1.0, 3.0); 3]);
                b.extend([(10.0, 30.0); 3]);
                b.extend([(1.1e7, 1.3e7); 3]);
                b.extend([(0.27, 0.29); 3]);
                b.extend([(10.0, 14.0); 2]);
                b.extend([(2.0, 4.0); 2]);
                b.extend([(0.27, 0.29); 2]);
                (18, torsion_fn, b)
            }
            "quadratic4" => (4, quadratic4_fn, vec![(-1.0, 1.0); 4]),
            "highdim100" => (100, highdim100_fn, vec![(-1.0, 1.0); 100]),
            other => return Err(Error::UnknownProblem(other.to_owned())),
        };
        Ok(Self {
            name: Self::NAMES.iter().find(|n| **n == name).expect("matched above"),
            d,
            m: 1,
            evaluator,
            input_box,
            noise_sd: 0.0,
        })
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    /// Latin-hypercube inputs over the box and (noisy) outputs.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Matrix, Matrix) {
        let x = latin_hypercube(n, &self.input_box, rng);
        let noise = Normal::new(0.0, self.noise_sd.max(0.0)).expect("finite sd");
        let y: Vec<f64> = x
            .row_iter()
            .map(|row| {
                let clean = self.evaluate(row);
                if self.noise_sd > 0.0 {
                    clean + noise.sample(rng)
                } else {
                    clean
                }
            })
            .collect();
        (x, Matrix::new(n, 1, y).expect("one output per row"))
    }
}

/// `n` points, one per stratum in every dimension, jittered uniformly within strata.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, bounds: &[(f64, f64)], rng: &mut R) -> Matrix {
    let d = bounds.len();
    let mut x = Matrix::zeros(n, d);
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        strata.shuffle(rng);
        for (i, &s) in strata.iter().enumerate() {
            let u = (s as f64 + rng.random::<f64>()) / n as f64;
            x.set(i, j, lo + u * (hi - lo));
        }
    }
    x
}

/// Outcome of one engine on one problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineReport {
    pub engine: Engine,
    pub trace: Vec<TraceRow>,
    pub final_rmse: Option<Vec<f64>>,
    pub total_factorizations: u64,
    pub per_worker_factorizations: u64,
    pub wall_time_s: f64,
    pub ensemble_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub problem: String,
    pub train_n: usize,
    pub test_n: usize,
    pub seed: u64,
    pub engines: Vec<EngineReport>,
}

impl BenchmarkReport {
    pub fn engine(&self, engine: Engine) -> Option<&EngineReport> {
        self.engines.iter().find(|e| e.engine == engine)
    }
}

/// Draws train and test designs for `problem`, then trains every listed engine in turn.
pub fn run_benchmark(
    problem: &SyntheticProblem,
    train_n: usize,
    test_n: usize,
    engines: &[Engine],
    config: &RunConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    let (train_set, test_set) = benchmark_data(problem, train_n, test_n, seed)?;
    let priors = PriorSpec::default_for(problem.d, problem.m);
    let mut reports = Vec::with_capacity(engines.len());
    for &engine in engines {
        let cfg = RunConfig {
            engine,
            ..config.clone()
        };
        let out = train(&train_set, test_set.as_ref(), &cfg, &priors)?;
        reports.push(EngineReport {
            engine,
            final_rmse: out.final_rmse.clone(),
            total_factorizations: out.total_factorizations,
            per_worker_factorizations: out.per_worker_factorizations,
            wall_time_s: out.trace.last().map_or(0.0, |r| r.wall_time_s),
            ensemble_size: out.ensemble.len(),
            trace: out.trace,
        });
    }
    Ok(BenchmarkReport {
        problem: problem.name.to_owned(),
        train_n,
        test_n,
        seed,
        engines: reports,
    })
}

/// Training set (normalized on itself) and optional test set for a problem.
pub fn benchmark_data(
    problem: &SyntheticProblem,
    train_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>)> {
    let (xtr, ytr) = problem.sample(train_n, &mut substream(seed, 1, 0));
    let names_x = default_names("x", problem.d);
    let names_y = vec!["y".to_owned()];
    let train_set = Dataset::from_raw(xtr, ytr, names_x.clone(), names_y.clone())?;
    let test_set = if test_n > 0 {
        let (xte, yte) = problem.sample(test_n, &mut substream(seed, 2, 0));
        Some(Dataset::with_normalization(
            xte,
            yte,
            names_x,
            names_y,
            train_set.normalization().clone(),
        )?)
    } else {
        None
    };
    Ok((train_set, test_set))
}
