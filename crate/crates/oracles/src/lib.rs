//! Slow, independent reference computations for testing `gptemper`.
//!
//! Nothing here calls into the library's numerical code. Datasets and parameter
//! vectors are read through their public accessors and every formula is rebuilt
//! from scratch with dense matrices.

use std::f64::consts::PI;

use gptemper::{Dataset, HyperParams, KernelForm};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Singular,
    /// Density at the grid boundary is not negligible relative to the peak.
    WidenGrid { boundary_ratio: f64 },
    BadInput(String),
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::error::Error for OracleError {}

pub type OracleResult<T> = Result<T, OracleError>;

// ---------------------------------------------------------------------------
// dense linear algebra

/// LU with partial pivoting. Returns `(log|det|, sign)` and the solution of `a x = b`
/// for every column of `rhs`.
pub fn lu_solve(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> OracleResult<(f64, f64, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut b: Vec<Vec<f64>> = rhs.to_vec();
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return Err(OracleError::Singular);
        }
        if pivot != col {
            m.swap(pivot, col);
            b.swap(pivot, col);
            sign = -sign;
        }
        let p = m[col][col];
        log_det += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
        for r in col + 1..n {
            let f = m[r][col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            for c in 0..b[r].len() {
                b[r][c] -= f * b[col][c];
            }
        }
    }
    let cols = rhs.first().map_or(0, |r| r.len());
    let mut x = vec![vec![0.0; cols]; n];
    for c in 0..cols {
        for r in (0..n).rev() {
            let mut s = b[r][c];
            for k in r + 1..n {
                s -= m[r][k] * x[k][c];
            }
            x[r][c] = s / m[r][r];
        }
    }
    Ok((log_det, sign, x))
}

// ---------------------------------------------------------------------------
// kernel, rebuilt

/// Per-output scalars read straight out of the flat layout
/// `[β₁..β_d, λ_z, λ_s]` per output, then `λ_o`.
#[derive(Debug, Clone)]
pub struct OutputParams {
    pub beta: Vec<f64>,
    pub lambda_z: f64,
    pub lambda_s: f64,
    pub lambda_o: f64,
}

pub fn output_params(theta: &[f64], d: usize, k: usize) -> OutputParams {
    let start = k * (d + 2);
    OutputParams {
        beta: theta[start..start + d].to_vec(),
        lambda_z: theta[start + d],
        lambda_s: theta[start + d + 1],
        lambda_o: *theta.last().unwrap(),
    }
}

pub fn kernel(a: &[f64], b: &[f64], p: &OutputParams, form: KernelForm) -> f64 {
    let terms: Vec<f64> = a
        .iter()
        .zip(b)
        .zip(&p.beta)
        .map(|((x, y), beta)| beta * (x - y) * (x - y))
        .collect();
    match form {
        KernelForm::ExponentiatedSum => (-terms.iter().sum::<f64>()).exp() / p.lambda_z,
        KernelForm::AdditiveSum => terms.iter().map(|t| (-t).exp()).sum::<f64>() / p.lambda_z,
    }
}

fn rows_of(m: &gptemper::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Full `Nm x Nm` covariance with one block per output, zeros elsewhere.
pub fn dense_covariance(x: &[Vec<f64>], m: usize, theta: &[f64], form: KernelForm) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mut s = vec![vec![0.0; n * m]; n * m];
    for k in 0..m {
        let p = output_params(theta, d, k);
        for i in 0..n {
            for j in 0..n {
                let mut v = kernel(&x[i], &x[j], &p, form);
                if i == j {
                    v += 1.0 / p.lambda_s + 1.0 / p.lambda_o;
                }
                s[k * n + i][k * n + j] = v;
            }
        }
    }
    s
}

/// `-½ log|Σ| - ½ Yᵀ Σ⁻¹ Y` over the explicit block-diagonal `Σ`, `Y` column-stacked.
pub fn dense_loglik(dataset: &Dataset, params: &HyperParams, form: KernelForm) -> OracleResult<f64> {
    let x = rows_of(dataset.inputs());
    let m = dataset.output_dim();
    let n = x.len();
    if n * m > 200 {
        return Err(OracleError::BadInput(format!("N*m = {} exceeds 200", n * m)));
    }
    let y: Vec<f64> = (0..m)
        .flat_map(|k| (0..n).map(move |i| (i, k)))
        .map(|(i, k)| dataset.outputs().get(i, k))
        .collect();
    let sigma = dense_covariance(&x, m, params.values(), form);
    dense_gaussian_loglik(&sigma, &y)
}

/// `-½ log|Σ| - ½ yᵀ Σ⁻¹ y` for an arbitrary dense `Σ`.
pub fn dense_gaussian_loglik(sigma: &[Vec<f64>], y: &[f64]) -> OracleResult<f64> {
    let rhs: Vec<Vec<f64>> = y.iter().map(|v| vec![*v]).collect();
    let (log_det, sign, sol) = lu_solve(sigma, &rhs)?;
    if sign <= 0.0 {
        return Err(OracleError::Singular);
    }
    let quad: f64 = y.iter().zip(&sol).map(|(a, s)| a * s[0]).sum();
    Ok(-0.5 * log_det - 0.5 * quad)
}

/// Standardized-space GP predictive mean and variance for one sample, one output,
/// computed with an explicit inverse.
pub fn dense_predict(
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    theta: &[f64],
    form: KernelForm,
) -> OracleResult<(Vec<f64>, Vec<f64>)> {
    let sigma = dense_covariance(x_train, 1, theta, form);
    let n = x_train.len();
    let identity: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let (_, _, inv) = lu_solve(&sigma, &identity)?;
    let p = output_params(theta, x_train[0].len(), 0);
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for t in x_test {
        let ks: Vec<f64> = x_train.iter().map(|xi| kernel(t, xi, &p, form)).collect();
        let mut mean = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                mean += ks[i] * inv[i][j] * y_train[j];
                quad += ks[i] * inv[i][j] * ks[j];
            }
        }
        means.push(mean);
        vars.push(kernel(t, t, &p, form) - quad + 1.0 / p.lambda_s + 1.0 / p.lambda_o);
    }
    Ok((means, vars))
}

// ---------------------------------------------------------------------------
// priors, rebuilt

/// `ln Γ(x)` by the Lanczos approximation (g = 7, nine coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

// ---------------------------------------------------------------------------
// quadrature

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Bounds of each free scalar (original scale; the grid is uniform in its log).
    pub bounds: Vec<(f64, f64)>,
    pub resolution: usize,
    /// `ln ∫ exp(f(u)) du` over the log-coordinates.
    pub log_normalizer: f64,
    /// Largest boundary density divided by the peak density.
    pub boundary_ratio: f64,
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal moments of `θ` when `log_density_u(u)` is the log-density of `u = ln θ`
/// on a tensor grid. One or two dimensions.
pub fn quadrature_log_space<F>(
    log_density_u: F,
    bounds: &[(f64, f64)],
    resolution: usize,
) -> OracleResult<QuadratureResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dims = bounds.len();
    if !(1..=2).contains(&dims) || resolution < 3 {
        return Err(OracleError::BadInput("1 or 2 dimensions, resolution >= 3".into()));
    }
    if bounds.iter().any(|(lo, hi)| !(*lo > 0.0 && lo < hi)) {
        return Err(OracleError::BadInput("bounds must satisfy 0 < lo < hi".into()));
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|(lo, hi)| {
            let (a, b) = (lo.ln(), hi.ln());
            (0..resolution)
                .map(|i| a + (b - a) * i as f64 / (resolution - 1) as f64)
                .collect()
        })
        .collect();
    let cell: f64 = bounds
        .iter()
        .map(|(lo, hi)| (hi.ln() - lo.ln()) / (resolution - 1) as f64)
        .product();

    let count = resolution.pow(dims as u32);
    let mut points = Vec::with_capacity(count);
    for flat in 0..count {
        let idx: Vec<usize> = (0..dims).map(|j| (flat / resolution.pow(j as u32)) % resolution).collect();
        let u: Vec<f64> = idx.iter().enumerate().map(|(j, &i)| axes[j][i]).collect();
        let w: f64 = idx.iter().map(|&i| trapezoid_weight(i, resolution)).product();
        let on_edge = idx.iter().any(|&i| i == 0 || i + 1 == resolution);
        points.push((u.clone(), w, log_density_u(&u), on_edge));
    }
    let peak = points
        .iter()
        .map(|p| p.2)
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(OracleError::BadInput("density is zero or invalid on the whole grid".into()));
    }
    let boundary = points
        .iter()
        .filter(|p| p.3)
        .map(|p| p.2)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut z = 0.0;
    let mut first = vec![0.0; dims];
    let mut second = vec![0.0; dims];
    for (u, w, lf, _) in &points {
        let mass = w * (lf - peak).exp();
        z += mass;
        for j in 0..dims {
            let theta = u[j].exp();
            first[j] += mass * theta;
            second[j] += mass * theta * theta;
        }
    }
    let means: Vec<f64> = first.iter().map(|s| s / z).collect();
    let variances = second
        .iter()
        .zip(&means)
        .map(|(s, m)| s / z - m * m)
        .collect();
    Ok(QuadratureResult {
        means,
        variances,
        bounds: bounds.to_vec(),
        resolution,
        log_normalizer: peak + (z * cell).ln(),
        boundary_ratio: (boundary - peak).exp(),
    })
}

/// Posterior moments of the free scalars of a GP with every other scalar pinned,
/// under independent `Gamma(shape, rate)` priors. Fails if the grid clips the mass.
pub fn quadrature_posterior(
    dataset: &Dataset,
    priors: &[(f64, f64)],
    free: &[usize],
    pinned: &HyperParams,
    bounds: &[(f64, f64)],
    resolution: usize,
    form: KernelForm,
) -> OracleResult<QuadratureResult> {
    if dataset.len() > 10 {
        return Err(OracleError::BadInput("quadrature is limited to N <= 10".into()));
    }
    if free.len() != bounds.len() || priors.len() != pinned.len() {
        return Err(OracleError::BadInput("free/bounds/prior lengths disagree".into()));
    }
    let x = rows_of(dataset.inputs());
    let m = dataset.output_dim();
    let n = x.len();
    let y: Vec<f64> = (0..m)
        .flat_map(|k| (0..n).map(move |i| (i, k)))
        .map(|(i, k)| dataset.outputs().get(i, k))
        .collect();
    let base = pinned.values().to_vec();
    let log_u = |u: &[f64]| {
        let mut theta = base.clone();
        for (j, &i) in free.iter().enumerate() {
            theta[i] = u[j].exp();
        }
        let sigma = dense_covariance(&x, m, &theta, form);
        let ll = match dense_gaussian_loglik(&sigma, &y) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let lp: f64 = theta
            .iter()
            .zip(priors)
            .map(|(t, (a, b))| gamma_ln_pdf(*t, *a, *b))
            .sum();
        // dθ = θ du
        ll + lp + u.iter().sum::<f64>()
    };
    let result = quadrature_log_space(log_u, bounds, resolution)?;
    if result.boundary_ratio >= 1e-4 {
        return Err(OracleError::WidenGrid {
            boundary_ratio: result.boundary_ratio,
        });
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// tempering

/// `1/Σw²` after normalizing `exp(log_weights)`.
pub fn ess_direct(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    1.0 / w.iter().map(|v| (v / s) * (v / s)).sum::<f64>()
}

/// First `γ` on a fine scan of `(gamma_i, 1]` where the reweighted ESS drops to
/// `ess_reduction · ESS(current)`, refined by linear interpolation between scan points.
/// Returns 1 when the ratio never drops that far.
pub fn gamma_scan(
    log_weights: &[f64],
    log_likelihoods: &[f64],
    gamma_i: f64,
    ess_reduction: f64,
    steps: usize,
) -> f64 {
    let target = ess_reduction * ess_direct(log_weights);
    let g = |gamma: f64| {
        let lw: Vec<f64> = log_weights
            .iter()
            .zip(log_likelihoods)
            .map(|(w, l)| w + (gamma - gamma_i) * l)
            .collect();
        ess_direct(&lw) - target
    };
    let mut prev = (gamma_i, g(gamma_i));
    for s in 1..=steps {
        let gamma = gamma_i + (1.0 - gamma_i) * s as f64 / steps as f64;
        let v = g(gamma);
        if v <= 0.0 {
            let (g0, v0) = prev;
            return g0 + (gamma - g0) * v0 / (v0 - v);
        }
        prev = (gamma, v);
    }
    1.0
}

// ---------------------------------------------------------------------------
// synthetic functions, step by step

pub fn torsion_reference(x: &[f64]) -> f64 {
    let g = 386.09;
    let (d, l, gm) = (&x[0..3], &x[3..6], &x[6..9]);
    let (dd, t, rho) = (&x[12..14], &x[14..16], &x[16..18]);
    let k1 = PI * gm[0] * d[0] / (32.0 * l[0]);
    let k2 = PI * gm[1] * d[1] / (32.0 * l[1]);
    let k3 = PI * gm[2] * d[2] / (32.0 * l[2]);
    let m1 = PI * t[0] * rho[0] * dd[0] / (4.0 * g);
    let m2 = PI * t[1] * rho[1] * dd[1] / (4.0 * g);
    let j1 = 0.5 * m1 * (dd[0] / 2.0) * (dd[0] / 2.0);
    let j2 = 0.5 * m2 * (dd[1] / 2.0) * (dd[1] / 2.0);
    let b = -((k1 + k2) / j1 + (k2 + k3) / j2);
    let c = (k1 * k2 + k2 * k3 + k3 * k1) / (j1 * j2);
    let root = (b * b - 4.0 * c).sqrt();
    ((-b + root) / 2.0).sqrt() / (2.0 * PI)
}

pub fn quadratic4_reference(x: &[f64]) -> f64 {
    let a = [
        [1.0, 0.5, 0.5, 0.5],
        [0.5, 2.0, 0.5, 0.5],
        [0.5, 0.5, 3.0, 0.5],
        [0.5, 0.5, 0.5, 4.0],
    ];
    let b = [1.0, -1.0, 1.0, -1.0];
    let ax: Vec<f64> = a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect();
    let quad: f64 = x.iter().zip(&ax).map(|(v, w)| v * w).sum();
    let lin: f64 = b.iter().zip(x).map(|(p, q)| p * q).sum();
    quad + lin + 0.5
}

pub fn highdim100_reference(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for l in 1..=50 {
        total += x[2 * l - 2].sin() * x[2 * l - 1];
    }
    for l in 1..=100 {
        total += l as f64 * x[l - 1] / 100.0;
    }
    total
}

pub fn scalability_reference(x: &[f64]) -> f64 {
    let s = f64::sin;
    3.0 * s(x[0]) * x[1] + x[2].cos() * s(x[3]) + s(x[4]) * s(x[5]) + s(x[6]) + s(x[7])
        + 7.0 * x[8]
        + 6.0 * x[9]
}

// ---------------------------------------------------------------------------
// distribution checks

/// Standard normal CDF through `erfc`, via the Numerical Recipes Chebyshev fit.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 2.0 / (2.0 + z);
    let ty = 4.0 * t - 2.0;
    const COF: [f64; 28] = [
        -1.3026537197817094, 6.4196979235649026e-1, 1.9476473204185836e-2,
        -9.561514786808631e-3, -9.46595344482036e-4, 3.66839497852761e-4,
        4.2523324806907e-5, -2.0278578112534e-5, -1.624290004647e-6,
        1.303655835580e-6, 1.5626441722e-8, -8.5238095915e-8,
        6.529054439e-9, 5.059343495e-9, -9.91364156e-10,
        -2.27365122e-10, 9.6467911e-11, 2.394038e-12,
        -6.886027e-12, 8.94487e-13, 3.13092e-13,
        -1.12708e-13, 3.81e-16, 7.106e-15,
        -1.523e-15, -9.4e-17, 1.21e-16,
        -2.8e-17,
    ];
    let (mut d, mut dd) = (0.0, 0.0);
    for c in COF.iter().skip(1).rev() {
        let tmp = d;
        d = ty * d - dd + c;
        dd = tmp;
    }
    let r = t * (-z * z + 0.5 * (COF[0] + ty * d) - dd).exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}


// ---------------------------------------------------------------------------
// shared fixtures

pub mod fixtures {
    use gptemper::{Dataset, HyperParams, Matrix};

    /// Indices of the two free scalars (`β` and `λ_s`) in the pinned 1-D problem.
    pub const FREE: [usize; 2] = [0, 2];

    /// Five noise-free points of `tanh(2x - 1)` on `[0, 1]`.
    pub fn pinned_1d_dataset() -> Dataset {
        let x = [0.0, 0.25, 0.5, 0.75, 1.0];
        let y = x.map(|v: f64| (2.0 * v - 1.0).tanh());
        Dataset::from_raw(
            Matrix::new(5, 1, x.to_vec()).unwrap(),
            Matrix::new(5, 1, y.to_vec()).unwrap(),
            vec!["x".into()],
            vec!["y".into()],
        )
        .unwrap()
    }

    /// `λ_z = 1` and `λ_o = 100` pinned; `β` and `λ_s` at their prior means.
    pub fn pinned_1d_values() -> HyperParams {
        HyperParams::new(1, 1, vec![1.0, 1.0, 1.0, 100.0]).unwrap()
    }

    /// Log-space quadrature bounds for `β` and `λ_s`.
    pub const BOUNDS: [(f64, f64); 2] = [(1e-7, 300.0), (1e-7, 300.0)];
}
