//! Densities the samplers move on.
//!
//! A [`Target`] exposes the likelihood split into independent blocks so that a
//! change to one scalar only refactorizes the blocks it touches. The samplers
//! cache an [`Evaluation`] per chain; tempering and reweighting reuse it for free.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{log_prior, PriorSpec};
use crate::kernel::{KernelForm, PairwiseDistances};
use crate::params::{BlockParams, HyperParams, Layout};

/// Cached per-block log-likelihood terms at one `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub blocks: Vec<f64>,
    /// Covariance factorizations spent producing this evaluation.
    pub factorizations: u64,
}

impl Evaluation {
    pub fn log_likelihood(&self) -> f64 {
        self.blocks.iter().sum()
    }
}

/// A positive-support density on `θ`, split into likelihood blocks and a prior.
pub trait Target: Sync {
    /// Length of `θ`.
    fn dim(&self) -> usize;

    /// Indices the samplers propose moves for; the rest stay at their initial values.
    fn free_indices(&self) -> &[usize];

    /// Full evaluation of every block.
    fn evaluate(&self, theta: &[f64]) -> Result<Evaluation>;

    /// Re-evaluates after `theta[changed]` moved, reusing untouched blocks of `current`.
    fn update(&self, theta: &[f64], changed: usize, current: &Evaluation) -> Result<Evaluation> {
        let _ = (changed, current);
        self.evaluate(theta)
    }

    fn log_prior(&self, theta: &[f64]) -> f64;

    /// Deterministic starting point for a single chain.
    fn initial_point(&self) -> Vec<f64>;

    /// Draws the free entries from the prior; pinned entries keep their initial values.
    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64>;

    /// Covariance factorizations one component update of `index` costs.
    fn update_cost(&self, index: usize) -> u64 {
        let _ = index;
        1
    }
}

/// The GP hyperparameter posterior for a dataset.
#[derive(Clone, Debug)]
pub struct GpTarget<'a> {
    dataset: &'a Dataset,
    priors: PriorSpec,
    form: KernelForm,
    jitter: f64,
    layout: Layout,
    distances: PairwiseDistances,
    outputs: Vec<Vec<f64>>,
    free: Vec<usize>,
    base: Vec<f64>,
}

impl<'a> GpTarget<'a> {
    pub fn new(dataset: &'a Dataset, priors: PriorSpec, form: KernelForm, jitter: f64) -> Result<Self> {
        let layout = Layout::new(dataset.input_dim(), dataset.output_dim());
        if priors.len() != layout.len() {
            return Err(Error::Config(format!(
                "{} priors for {} hyperparameters",
                priors.len(),
                layout.len()
            )));
        }
        if !(jitter > 0.0 && jitter.is_finite()) {
            return Err(Error::Config(format!("jitter must be positive, got {jitter}")));
        }
        let base = priors.priors.iter().map(|p| p.mean()).collect();
        Ok(Self {
            dataset,
            form,
            jitter,
            layout,
            distances: PairwiseDistances::new(dataset),
            outputs: (0..dataset.output_dim()).map(|k| dataset.output_column(k)).collect(),
            free: (0..layout.len()).collect(),
            base,
            priors,
        })
    }

    /// Pins every scalar not listed in `free` at its value in `values`.
    pub fn with_pinned(mut self, values: &HyperParams, free: &[usize]) -> Result<Self> {
        if values.layout() != self.layout {
            return Err(Error::Shape("pinned values do not match the dataset".into()));
        }
        let mut free = free.to_vec();
        free.sort_unstable();
        free.dedup();
        if free.is_empty() || free.iter().any(|&i| i >= self.layout.len()) {
            return Err(Error::Config("free indices empty or out of range".into()));
        }
        self.base = values.values().to_vec();
        self.free = free;
        Ok(self)
    }

    /// Starts chains from `values` instead of the prior means. All scalars stay free.
    pub fn with_start(mut self, values: &HyperParams) -> Result<Self> {
        if values.layout() != self.layout {
            return Err(Error::Shape("start values do not match the dataset".into()));
        }
        self.base = values.values().to_vec();
        Ok(self)
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn priors(&self) -> &PriorSpec {
        &self.priors
    }

    pub fn form(&self) -> KernelForm {
        self.form
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn block_log_likelihood(&self, theta: &[f64], k: usize) -> Result<f64> {
        let bp = BlockParams::from_slice(self.layout, theta, k);
        let block = self.distances.build_block(bp, k, self.form, self.jitter, theta)?;
        Ok(-0.5 * block.log_det - 0.5 * block.cholesky.quadratic_form(&self.outputs[k]))
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.layout.len() {
            return Err(Error::Shape(format!(
                "theta has {} entries, expected {}",
                theta.len(),
                self.layout.len()
            )));
        }
        if theta.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("theta {theta:?} has a non-positive entry")));
        }
        Ok(())
    }
}

impl Target for GpTarget<'_> {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn free_indices(&self) -> &[usize] {
        &self.free
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Evaluation> {
        self.check(theta)?;
        let blocks = (0..self.layout.m)
            .map(|k| self.block_log_likelihood(theta, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluation {
            factorizations: blocks.len() as u64,
            blocks,
        })
    }

    fn update(&self, theta: &[f64], changed: usize, current: &Evaluation) -> Result<Evaluation> {
        self.check(theta)?;
        match self.layout.kind(changed).block() {
            Some(k) => {
                let mut blocks = current.blocks.clone();
                blocks[k] = self.block_log_likelihood(theta, k)?;
                Ok(Evaluation {
                    blocks,
                    factorizations: 1,
                })
            }
            None => self.evaluate(theta),
        }
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        log_prior(theta, &self.priors)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.base.clone()
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = self.base.clone();
        for &i in &self.free {
            // the Gamma sampler can underflow to zero for tiny shapes
            theta[i] = self.priors.priors[i].sample(rng).max(f64::MIN_POSITIVE);
        }
        theta
    }

    fn update_cost(&self, index: usize) -> u64 {
        match self.layout.kind(index).block() {
            Some(_) => 1,
            None => self.layout.m as u64,
        }
    }
}
