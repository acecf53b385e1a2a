//! Run configuration and the engine dispatcher shared by the CLI, benchmarks and demo.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::PriorSpec;
use crate::kernel::KernelForm;
use crate::mcmc::{run_mcmc, AcceptanceBand, McmcSettings};
use crate::predict::{rmse, PosteriorEnsemble, Predictor, Provenance, RmseProbe};
use crate::smc::{run_asmc, AsmcSettings, TemperLevel, TemperSchedule};
use crate::target::GpTarget;
use crate::trace::{Probe, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Mcmc,
    Asmc,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Mcmc => "mcmc",
            Engine::Asmc => "asmc",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcmc" => Ok(Engine::Mcmc),
            "asmc" => Ok(Engine::Asmc),
            other => Err(Error::Config(format!("unknown engine `{other}`"))),
        }
    }
}

/// How ASMC picks its temperatures. `gamma0` lives on [`RunConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScheduleSpec {
    /// `count` evenly spaced values from `gamma0` to 1.
    Grid { count: usize },
    /// An explicit ascending list ending at 1; `gamma0` is ignored.
    Explicit { gammas: Vec<f64> },
    Adaptive { ess_reduction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: Engine,
    pub particles: usize,
    /// Metropolis sweeps per particle at each temperature.
    pub steps_per_gamma: usize,
    pub schedule: ScheduleSpec,
    pub gamma0: f64,
    pub mcmc_total_steps: usize,
    pub mcmc_init_steps: usize,
    pub seed: u64,
    pub workers: usize,
    pub kernel_form: KernelForm,
    pub jitter: f64,
    /// MCMC trace cadence in sweeps.
    pub trace_every: usize,
    /// Cap on ensemble members used for held-out prediction (0 keeps all).
    pub predict_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Asmc,
            particles: 60,
            steps_per_gamma: 1,
            schedule: ScheduleSpec::Grid { count: 10 },
            gamma0: 0.001,
            mcmc_total_steps: 5800,
            mcmc_init_steps: 1000,
            seed: 0,
            workers: 1,
            kernel_form: KernelForm::ExponentiatedSum,
            jitter: 1e-10,
            trace_every: 50,
            predict_samples: 200,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.steps_per_gamma == 0 || self.workers == 0 {
            return Err(Error::Config(
                "particles, steps_per_gamma and workers must be positive".into(),
            ));
        }
        if !(self.jitter > 0.0 && self.jitter.is_finite()) {
            return Err(Error::Config(format!("jitter must be positive, got {}", self.jitter)));
        }
        self.temper_schedule()?;
        self.mcmc_settings().validate()?;
        self.asmc_settings()?.validate()
    }

    pub fn temper_schedule(&self) -> Result<TemperSchedule> {
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return Err(Error::Config(format!("gamma0 {} outside (0, 1)", self.gamma0)));
        }
        match &self.schedule {
            ScheduleSpec::Grid { count } => TemperSchedule::uniform_grid(self.gamma0, *count),
            ScheduleSpec::Explicit { gammas } => TemperSchedule::grid(gammas.clone()),
            ScheduleSpec::Adaptive { ess_reduction } => {
                TemperSchedule::adaptive(self.gamma0, *ess_reduction)
            }
        }
    }

    pub fn mcmc_settings(&self) -> McmcSettings {
        McmcSettings {
            total_steps: self.mcmc_total_steps,
            init_steps: self.mcmc_init_steps,
            seed: self.seed,
            trace_every: self.trace_every,
            ..McmcSettings::default()
        }
    }

    pub fn asmc_settings(&self) -> Result<AsmcSettings> {
        Ok(AsmcSettings {
            particles: self.particles,
            steps_per_gamma: self.steps_per_gamma,
            schedule: self.temper_schedule()?,
            seed: self.seed,
            workers: self.workers,
            initial_width: 0.5,
            band: AcceptanceBand::default(),
        })
    }

    pub fn schedule_summary(&self) -> String {
        match self.engine {
            Engine::Mcmc => format!(
                "mcmc({} steps, {} init)",
                self.mcmc_total_steps, self.mcmc_init_steps
            ),
            Engine::Asmc => match self.temper_schedule() {
                Ok(s) => s.describe(),
                Err(_) => "invalid".into(),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub ensemble: PosteriorEnsemble,
    pub trace: Vec<TraceRow>,
    /// Held-out RMSE of the (thinned) ensemble, original units.
    pub final_rmse: Option<Vec<f64>>,
    pub total_factorizations: u64,
    /// Factorizations on the busiest worker; equals the total for MCMC.
    pub per_worker_factorizations: u64,
    /// Visited temperatures, ASMC only.
    pub levels: Vec<TemperLevel>,
}

/// Runs the configured engine on `train`, tracing held-out RMSE when `test` is given.
pub fn train(
    train: &Dataset,
    test: Option<&Dataset>,
    config: &RunConfig,
    priors: &PriorSpec,
) -> Result<TrainOutcome> {
    config.validate()?;
    let target = GpTarget::new(train, priors.clone(), config.kernel_form, config.jitter)?;
    let probe = match test {
        Some(t) if !t.is_empty() => Some(RmseProbe::new(train, t, config.kernel_form, config.jitter)?),
        _ => None,
    };
    let probe_ref = probe.as_ref().map(|p| p as &dyn Probe);
    let provenance = Provenance {
        engine: config.engine.to_string(),
        seed: config.seed,
        schedule: config.schedule_summary(),
    };
    let layout = target.layout();

    let (ensemble, trace, total, per_worker, levels) = match config.engine {
        Engine::Mcmc => {
            let out = run_mcmc(&target, &config.mcmc_settings(), probe_ref)?;
            let ens = PosteriorEnsemble::uniform(layout, out.samples, provenance)?;
            (ens, out.trace, out.factorizations, out.factorizations, Vec::new())
        }
        Engine::Asmc => {
            let out = run_asmc(&target, &config.asmc_settings()?, probe_ref)?;
            let total = out.total_factorizations();
            let per_worker = out.per_worker_factorizations();
            let ens = PosteriorEnsemble::uniform(layout, out.samples, provenance)?;
            (ens, out.trace, total, per_worker, out.levels)
        }
    };

    let final_rmse = match test {
        Some(t) if !t.is_empty() => {
            let thin = ensemble.thinned(config.predict_samples);
            let pred = Predictor::new(train, t.inputs(), config.kernel_form, config.jitter)?
                .predict(&thin)?;
            Some(rmse(&pred.mean, &t.raw_outputs())?)
        }
        _ => None,
    };

    Ok(TrainOutcome {
        ensemble,
        trace,
        final_rmse,
        total_factorizations: total,
        per_worker_factorizations: per_worker,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.temper_schedule().unwrap().first(), 0.001);
        assert_eq!("ASMC".parse::<Engine>().unwrap(), Engine::Asmc);
        assert!("hmc".parse::<Engine>().is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            RunConfig { gamma0: 1.0, ..Default::default() },
            RunConfig { mcmc_init_steps: 5800, ..Default::default() },
            RunConfig { schedule: ScheduleSpec::Grid { count: 1 }, ..Default::default() },
            RunConfig { schedule: ScheduleSpec::Adaptive { ess_reduction: 1.0 }, ..Default::default() },
            RunConfig { particles: 0, ..Default::default() },
            RunConfig { jitter: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }
}
