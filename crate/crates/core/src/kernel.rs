//! Per-output covariance blocks.
//!
//! The multi-output covariance is block diagonal with one `N x N` block per
//! output, so it is never assembled as a whole: every quantity downstream is a
//! sum over blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::params::{BlockParams, HyperParams};

/// How the per-dimension squared distances enter the kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelForm {
    /// `exp(-Σ_l β_l Δ_l²) / λ_z`, the ARD squared exponential.
    #[default]
    ExponentiatedSum,
    /// `Σ_l exp(-β_l Δ_l²) / λ_z`, one squared exponential per dimension, summed.
    AdditiveSum,
}

impl fmt::Display for KernelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelForm::ExponentiatedSum => "exponentiated-sum",
            KernelForm::AdditiveSum => "additive-sum",
        })
    }
}

impl FromStr for KernelForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponentiated-sum" => Ok(KernelForm::ExponentiatedSum),
            "additive-sum" => Ok(KernelForm::AdditiveSum),
            other => Err(Error::Config(format!("unknown kernel form `{other}`"))),
        }
    }
}

impl KernelForm {
    /// Kernel term from per-dimension squared distances.
    #[inline]
    pub fn from_sq_dists(self, sq: &[f64], beta: &[f64], lambda_z: f64) -> f64 {
        match self {
            KernelForm::ExponentiatedSum => {
                let s: f64 = beta.iter().zip(sq).map(|(b, d)| b * d).sum();
                (-s).exp() / lambda_z
            }
            KernelForm::AdditiveSum => {
                beta.iter().zip(sq).map(|(b, d)| (-b * d).exp()).sum::<f64>() / lambda_z
            }
        }
    }

    /// Kernel value at zero distance.
    pub fn prior_variance(self, d: usize, lambda_z: f64) -> f64 {
        match self {
            KernelForm::ExponentiatedSum => 1.0 / lambda_z,
            KernelForm::AdditiveSum => d as f64 / lambda_z,
        }
    }
}

/// Kernel term between two inputs, without noise.
pub fn kernel_value(xi: &[f64], xj: &[f64], beta: &[f64], lambda_z: f64, form: KernelForm) -> f64 {
    match form {
        KernelForm::ExponentiatedSum => {
            let s: f64 = xi
                .iter()
                .zip(xj)
                .zip(beta)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum();
            (-s).exp() / lambda_z
        }
        KernelForm::AdditiveSum => {
            xi.iter()
                .zip(xj)
                .zip(beta)
                .map(|((a, b), w)| (-w * (a - b) * (a - b)).exp())
                .sum::<f64>()
                / lambda_z
        }
    }
}

/// One covariance entry. The noise precisions contribute `1/λ_s + 1/λ_o` only when
/// `same_point` is set, i.e. on the diagonal.
#[allow(clippy::too_many_arguments)]
pub fn cov_entry(
    xi: &[f64],
    xj: &[f64],
    beta: &[f64],
    lambda_z: f64,
    lambda_s: f64,
    lambda_o: f64,
    same_point: bool,
    form: KernelForm,
) -> Result<f64> {
    if xi.len() != xj.len() || xi.len() != beta.len() {
        return Err(Error::Shape(format!(
            "input lengths {} / {} with {} length-scales",
            xi.len(),
            xj.len(),
            beta.len()
        )));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !beta.iter().all(|&b| positive(b))
        || !positive(lambda_z)
        || !positive(lambda_s)
        || !positive(lambda_o)
    {
        return Err(Error::Domain(
            "kernel hyperparameters must be positive and finite".into(),
        ));
    }
    let mut v = kernel_value(xi, xj, beta, lambda_z, form);
    if same_point {
        v += 1.0 / lambda_s + 1.0 / lambda_o;
    }
    Ok(v)
}

/// A factorized covariance block for a single output.
#[derive(Clone, Debug)]
pub struct CovarianceBlock {
    pub n: usize,
    /// Row-major `N x N`, without jitter.
    pub matrix: Vec<f64>,
    pub cholesky: Cholesky,
    pub log_det: f64,
    pub jitter_used: f64,
}

/// Factorizes `matrix`, escalating diagonal jitter geometrically (x10) from `base_jitter`
/// up to `1e-4 * mean(diag)` when the unjittered attempt fails.
pub(crate) fn factor_with_jitter(
    matrix: &[f64],
    n: usize,
    base_jitter: f64,
) -> Option<(Cholesky, f64)> {
    if let Some(c) = Cholesky::factor(matrix, n, 0.0) {
        return Some((c, 0.0));
    }
    let mean_diag = (0..n).map(|i| matrix[i * n + i]).sum::<f64>() / n as f64;
    let cap = 1e-4 * mean_diag;
    let mut jitter = base_jitter;
    while jitter <= cap * (1.0 + 1e-12) {
        if let Some(c) = Cholesky::factor(matrix, n, jitter) {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

pub(crate) fn max_jitter(matrix: &[f64], n: usize) -> f64 {
    1e-4 * (0..n).map(|i| matrix[i * n + i]).sum::<f64>() / n as f64
}

fn finish_block(
    matrix: Vec<f64>,
    n: usize,
    output: usize,
    theta: &[f64],
    jitter: f64,
) -> Result<CovarianceBlock> {
    match factor_with_jitter(&matrix, n, jitter) {
        Some((cholesky, jitter_used)) => Ok(CovarianceBlock {
            n,
            log_det: cholesky.log_det(),
            matrix,
            cholesky,
            jitter_used,
        }),
        None => Err(Error::NotPositiveDefinite {
            output,
            jitter: max_jitter(&matrix, n),
            theta: theta.to_vec(),
        }),
    }
}

/// Builds and factorizes the covariance block of output `k` from the dataset inputs.
pub fn build_block(
    dataset: &Dataset,
    k: usize,
    params: &HyperParams,
    form: KernelForm,
    jitter: f64,
) -> Result<CovarianceBlock> {
    if k >= dataset.output_dim() {
        return Err(Error::Shape(format!(
            "output index {k} with {} outputs",
            dataset.output_dim()
        )));
    }
    if params.layout().d != dataset.input_dim() || params.layout().m != dataset.output_dim() {
        return Err(Error::Shape(
            "hyperparameters do not match the dataset dimensions".into(),
        ));
    }
    let bp = BlockParams::of(params, k);
    let x = dataset.inputs();
    let n = x.rows();
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = cov_entry(
                x.row(i),
                x.row(j),
                bp.beta,
                bp.lambda_z,
                bp.lambda_s,
                bp.lambda_o,
                i == j,
                form,
            )?;
            matrix[i * n + j] = v;
            matrix[j * n + i] = v;
        }
    }
    finish_block(matrix, n, k, params.values(), jitter)
}

/// Per-dimension squared distances between all pairs of training inputs, computed
/// once per dataset so that rebuilding a block costs only the kernel evaluations.
#[derive(Clone, Debug)]
pub struct PairwiseDistances {
    n: usize,
    d: usize,
    /// Strict lower triangle, row by row; `d` entries per pair.
    sq: Vec<f64>,
}

impl PairwiseDistances {
    pub fn new(dataset: &Dataset) -> Self {
        let x = dataset.inputs();
        let (n, d) = (x.rows(), x.cols());
        let mut sq = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for i in 0..n {
            for j in 0..i {
                sq.extend(x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)));
            }
        }
        Self { n, d, sq }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Builds and factorizes one block. `theta` is only used for error reporting.
    pub fn build_block(
        &self,
        bp: BlockParams<'_>,
        output: usize,
        form: KernelForm,
        jitter: f64,
        theta: &[f64],
    ) -> Result<CovarianceBlock> {
        let n = self.n;
        let diag = form.prior_variance(self.d, bp.lambda_z) + 1.0 / bp.lambda_s + 1.0 / bp.lambda_o;
        let mut matrix = vec![0.0; n * n];
        let mut pairs = self.sq.chunks_exact(self.d);
        for i in 0..n {
            for j in 0..i {
                let sq = pairs.next().expect("pair count matches");
                let v = form.from_sq_dists(sq, bp.beta, bp.lambda_z);
                matrix[i * n + j] = v;
                matrix[j * n + i] = v;
            }
            matrix[i * n + i] = diag;
        }
        finish_block(matrix, n, output, theta, jitter)
    }
}
