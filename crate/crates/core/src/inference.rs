//! Log-likelihood, priors and the tempered family of targets.
//!
//! Tempering scales the likelihood only: the target at inverse temperature `γ` is
//! `γ · log L(θ) + log p(θ)`. At `γ = 0` this is the prior, at `γ = 1` the posterior.
//! The `-(N m / 2) log 2π` constant is dropped everywhere.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{build_block, KernelForm};
use crate::params::{hyperparam_count, HyperParams};

/// Gamma distribution with shape `k` and rate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::Config(format!(
                "gamma prior needs positive shape and rate, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    /// The prior with the given shape whose mean is one.
    pub fn unit_mean(shape: f64) -> Result<Self> {
        Self::new(shape, shape)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// `log p(x)`; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - libm::lgamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rand_distr::Gamma::new(self.shape, 1.0 / self.rate)
            .expect("validated at construction")
            .sample(rng)
    }
}

/// Independent Gamma priors, one per scalar hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub priors: Vec<GammaPrior>,
}

impl PriorSpec {
    pub const DEFAULT_SHAPE: f64 = 1.1;

    /// Gamma(1.1, 1.1) on every scalar: mean one in normalized units.
    pub fn default_for(d: usize, m: usize) -> Self {
        let g = GammaPrior::unit_mean(Self::DEFAULT_SHAPE).expect("constant is valid");
        Self::repeated(g, hyperparam_count(d, m))
    }

    pub fn repeated(prior: GammaPrior, count: usize) -> Self {
        Self {
            priors: vec![prior; count],
        }
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }
}

/// Sum of independent Gamma log-densities. Any non-positive entry gives `-inf`.
pub fn log_prior(theta: &[f64], priors: &PriorSpec) -> f64 {
    debug_assert_eq!(theta.len(), priors.len());
    theta
        .iter()
        .zip(&priors.priors)
        .map(|(&x, p)| p.ln_pdf(x))
        .sum()
}

/// `Σ_k [ -½ log|Σ_k| - ½ y_kᵀ Σ_k⁻¹ y_k ]` over the outputs.
pub fn log_likelihood(
    dataset: &Dataset,
    params: &HyperParams,
    form: KernelForm,
    jitter: f64,
) -> Result<f64> {
    (0..dataset.output_dim())
        .map(|k| {
            let block = build_block(dataset, k, params, form, jitter)?;
            let y = dataset.output_column(k);
            Ok(-0.5 * block.log_det - 0.5 * block.cholesky.quadratic_form(&y))
        })
        .sum()
}

/// Components of the tempered log target at one `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDensity {
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub gamma: f64,
    pub tempered_log_target: f64,
}

impl LogDensity {
    pub fn new(log_likelihood: f64, log_prior: f64, gamma: f64) -> Self {
        Self {
            log_likelihood,
            log_prior,
            gamma,
            tempered_log_target: tempered(log_likelihood, log_prior, gamma),
        }
    }

    /// Same point at another temperature; no likelihood evaluation needed.
    pub fn retemper(&self, gamma: f64) -> Self {
        Self::new(self.log_likelihood, self.log_prior, gamma)
    }
}

#[inline]
pub(crate) fn tempered(log_likelihood: f64, log_prior: f64, gamma: f64) -> f64 {
    // γ = 0 must give the prior exactly, even when the likelihood is -inf
    if gamma == 0.0 {
        log_prior
    } else {
        gamma * log_likelihood + log_prior
    }
}

pub fn tempered_log_target(
    dataset: &Dataset,
    params: &HyperParams,
    gamma: f64,
    priors: &PriorSpec,
    form: KernelForm,
    jitter: f64,
) -> Result<LogDensity> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma {gamma} outside [0, 1]")));
    }
    let ll = log_likelihood(dataset, params, form, jitter)?;
    Ok(LogDensity::new(ll, log_prior(params.values(), priors), gamma))
}
