//! Fully Bayesian Gaussian-process regression with tempered sequential Monte Carlo.
//!
//! Hyperparameters of a multi-output ARD Gaussian process are sampled either with a
//! single adaptive random-walk Metropolis chain or with a population of chains moved
//! through a sequence of tempered posteriors (ASMC). Both engines count covariance
//! factorizations so their cost can be compared directly.

pub mod benchmarks;
pub mod config;
pub mod data;
pub mod error;
pub mod inference;
pub mod kernel;
pub mod linalg;
pub mod matrix;
pub mod mcmc;
pub mod params;
pub mod predict;
pub mod rng;
pub mod smc;
pub mod target;
pub mod trace;

pub use config::{train, Engine, RunConfig, ScheduleSpec, TrainOutcome};
pub use data::{load_dataset, Dataset, Normalization};
pub use error::{Error, Result};
pub use inference::{log_likelihood, log_prior, GammaPrior, PriorSpec};
pub use kernel::KernelForm;
pub use matrix::Matrix;
pub use params::{hyperparam_count, HyperParams, Layout};
pub use predict::{predict, rmse, PosteriorEnsemble, Prediction};
pub use smc::TemperSchedule;
pub use target::{GpTarget, Target};
pub use trace::TraceRow;
