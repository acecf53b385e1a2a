//! Component-wise random-walk Metropolis in log-space, and the two-phase baseline
//! chain built on it: a width-tuning initialization phase whose samples are
//! discarded, then a main chain at fixed widths whose every sweep is kept.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::LogDensity;
use crate::rng::{substream, StreamRng};
use crate::target::{Evaluation, Target};
use crate::trace::{Probe, Stopwatch, TraceRow};

/// Acceptance-ratio band used for width tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceBand {
    pub low: f64,
    pub high: f64,
}

impl Default for AcceptanceBand {
    fn default() -> Self {
        Self { low: 0.2, high: 0.5 }
    }
}

/// One Markov chain: current `θ`, its cached evaluation and per-scalar proposal widths.
#[derive(Clone, Debug)]
pub struct ChainState {
    theta: Vec<f64>,
    evaluation: Evaluation,
    density: LogDensity,
    widths: Vec<f64>,
    accepted: Vec<u64>,
    proposed: Vec<u64>,
    step_index: u64,
    rng: StreamRng,
}

impl ChainState {
    /// Evaluates `theta` once (this costs a full set of factorizations, reported in
    /// `evaluation().factorizations`).
    pub fn new<T: Target>(
        target: &T,
        theta: Vec<f64>,
        initial_width: f64,
        gamma: f64,
        rng: StreamRng,
    ) -> Result<Self> {
        if !(initial_width > 0.0 && initial_width.is_finite()) {
            return Err(Error::Config(format!(
                "initial proposal width must be positive, got {initial_width}"
            )));
        }
        let evaluation = target.evaluate(&theta)?;
        let density = LogDensity::new(evaluation.log_likelihood(), target.log_prior(&theta), gamma);
        let n = theta.len();
        Ok(Self {
            theta,
            evaluation,
            density,
            widths: vec![initial_width; n],
            accepted: vec![0; n],
            proposed: vec![0; n],
            step_index: 0,
            rng,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn density(&self) -> &LogDensity {
        &self.density
    }

    pub fn log_likelihood(&self) -> f64 {
        self.density.log_likelihood
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn set_widths(&mut self, widths: Vec<f64>) {
        assert_eq!(widths.len(), self.widths.len());
        assert!(widths.iter().all(|w| *w > 0.0));
        self.widths = widths;
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn counts(&self, index: usize) -> (u64, u64) {
        (self.accepted[index], self.proposed[index])
    }

    pub fn acceptance_ratio(&self, index: usize) -> Option<f64> {
        (self.proposed[index] > 0).then(|| self.accepted[index] as f64 / self.proposed[index] as f64)
    }

    /// Moves the chain to another temperature without touching the likelihood cache.
    pub fn set_gamma(&mut self, gamma: f64) {
        self.density = self.density.retemper(gamma);
    }

    pub fn reseed(&mut self, rng: StreamRng) {
        self.rng = rng;
    }
}

/// One full sweep: each free scalar in turn gets a log-space Gaussian proposal with
/// its own width, accepted by the Metropolis rule on the tempered target plus the
/// log-Jacobian `log θ' - log θ`. Returns the number of factorizations spent.
pub fn metropolis_step<T: Target>(state: &mut ChainState, gamma: f64, target: &T) -> Result<u64> {
    if state.density.gamma != gamma {
        state.set_gamma(gamma);
    }
    let mut spent = 0;
    for &i in target.free_indices() {
        let eps: f64 = state.rng.sample(StandardNormal);
        let u: f64 = state.rng.random();
        state.proposed[i] += 1;

        let old = state.theta[i];
        let log_jump = state.widths[i] * eps;
        let new = (old.ln() + log_jump).exp();
        if !(new.is_finite() && new > 0.0) {
            continue;
        }
        state.theta[i] = new;
        let eval = target.update(&state.theta, i, &state.evaluation)?;
        spent += eval.factorizations;
        let cand = LogDensity::new(eval.log_likelihood(), target.log_prior(&state.theta), gamma);
        let log_alpha = cand.tempered_log_target - state.density.tempered_log_target
            + (new.ln() - old.ln());
        if cand.tempered_log_target.is_finite() && (log_alpha >= 0.0 || u.ln() < log_alpha) {
            state.evaluation = eval;
            state.density = cand;
            state.accepted[i] += 1;
        } else {
            state.theta[i] = old;
        }
    }
    state.step_index += 1;
    Ok(spent)
}

/// Doubles widths whose acceptance ratio is above the band, halves those below it,
/// then clears the counters. Scalars never proposed keep their width.
pub fn tune_widths(state: &mut ChainState, band: AcceptanceBand) {
    for i in 0..state.widths.len() {
        if let Some(ratio) = state.acceptance_ratio(i) {
            if ratio > band.high {
                state.widths[i] *= 2.0;
            } else if ratio < band.low {
                state.widths[i] *= 0.5;
            }
        }
    }
    state.accepted.iter_mut().for_each(|c| *c = 0);
    state.proposed.iter_mut().for_each(|c| *c = 0);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    /// Sweeps in total, initialization included.
    pub total_steps: usize,
    pub init_steps: usize,
    /// Width tuning period during initialization, in sweeps.
    pub tune_every: usize,
    pub initial_width: f64,
    pub band: AcceptanceBand,
    pub seed: u64,
    /// A trace row every this many sweeps (plus the last sweep and the end of initialization).
    pub trace_every: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            total_steps: 5800,
            init_steps: 1000,
            tune_every: 50,
            initial_width: 0.5,
            band: AcceptanceBand::default(),
            seed: 0,
            trace_every: 50,
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.init_steps >= self.total_steps {
            return Err(Error::Config(format!(
                "need 0 <= init_steps < total_steps, got {} / {}",
                self.init_steps, self.total_steps
            )));
        }
        if self.tune_every == 0 || self.trace_every == 0 {
            return Err(Error::Config("tune_every and trace_every must be positive".into()));
        }
        if !(self.band.low < self.band.high) {
            return Err(Error::Config("acceptance band must satisfy low < high".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct McmcOutcome {
    /// Main-chain states, one per sweep, equally weighted.
    pub samples: Vec<Vec<f64>>,
    pub trace: Vec<TraceRow>,
    /// Every factorization, including the initial evaluation.
    pub factorizations: u64,
    /// Factorizations spent up to the end of the initialization phase.
    pub init_factorizations: u64,
    pub final_state: ChainState,
}

/// Runs the two-phase chain at `γ = 1` from `target.initial_point()`.
pub fn run_mcmc<T: Target>(
    target: &T,
    settings: &McmcSettings,
    probe: Option<&dyn Probe>,
) -> Result<McmcOutcome> {
    settings.validate()?;
    let mut clock = Stopwatch::start();
    let mut state = ChainState::new(
        target,
        target.initial_point(),
        settings.initial_width,
        1.0,
        substream(settings.seed, 0, 0),
    )?;
    let mut factorizations = state.evaluation.factorizations;
    let mut init_factorizations = factorizations;
    let mut samples = Vec::with_capacity(settings.total_steps - settings.init_steps);
    let mut trace = Vec::new();

    for sweep in 1..=settings.total_steps {
        factorizations += metropolis_step(&mut state, 1.0, target)?;
        if sweep <= settings.init_steps {
            if sweep % settings.tune_every == 0 {
                tune_widths(&mut state, settings.band);
            }
            if sweep == settings.init_steps {
                init_factorizations = factorizations;
            }
        } else {
            samples.push(state.theta.clone());
        }

        if sweep % settings.trace_every == 0
            || sweep == settings.total_steps
            || sweep == settings.init_steps
        {
            clock.pause();
            let rmse = probe
                .map(|p| p.rmse(&[state.theta()], &[1.0]))
                .transpose()?;
            trace.push(TraceRow {
                wall_time_s: clock.elapsed(),
                step_or_gamma: sweep as f64,
                ess: None,
                log_target_mean: state.density.tempered_log_target,
                factorizations,
                rmse,
            });
            clock.resume();
        }
    }

    Ok(McmcOutcome {
        samples,
        trace,
        factorizations,
        init_factorizations,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Evaluation;

    /// Gaussian in `θ` with the given moments and a flat prior.
    pub(crate) struct Gaussian1d {
        pub mean: f64,
        pub sd: f64,
        pub free: Vec<usize>,
    }

    impl Target for Gaussian1d {
        fn dim(&self) -> usize {
            1
        }
        fn free_indices(&self) -> &[usize] {
            &self.free
        }
        fn evaluate(&self, theta: &[f64]) -> Result<Evaluation> {
            let z = (theta[0] - self.mean) / self.sd;
            Ok(Evaluation {
                blocks: vec![-0.5 * z * z],
                factorizations: 1,
            })
        }
        fn log_prior(&self, _theta: &[f64]) -> f64 {
            0.0
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![self.mean]
        }
        fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
            vec![self.mean]
        }
    }

    /// Flat in log-coordinates: every log-space proposal is accepted.
    struct LogFlat;

    impl Target for LogFlat {
        fn dim(&self) -> usize {
            2
        }
        fn free_indices(&self) -> &[usize] {
            &[0, 1]
        }
        fn evaluate(&self, _theta: &[f64]) -> Result<Evaluation> {
            Ok(Evaluation {
                blocks: vec![0.0],
                factorizations: 1,
            })
        }
        fn log_prior(&self, theta: &[f64]) -> f64 {
            -theta.iter().map(|t| t.ln()).sum::<f64>()
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![1.0, 1.0]
        }
        fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<f64> {
            vec![1.0, 1.0]
        }
    }

    fn gaussian() -> Gaussian1d {
        Gaussian1d {
            mean: 5.0,
            sd: 0.5,
            free: vec![0],
        }
    }

    #[test]
    fn vanishing_width_keeps_state() {
        let t = gaussian();
        let mut s = ChainState::new(&t, vec![4.2], 1e-300, 1.0, substream(1, 0, 0)).unwrap();
        for _ in 0..100 {
            metropolis_step(&mut s, 1.0, &t).unwrap();
        }
        assert_eq!(s.counts(0), (100, 100));
        assert!((s.theta()[0] - 4.2).abs() < 1e-12);
    }

    #[test]
    fn flat_target_always_accepts() {
        let t = LogFlat;
        let mut s = ChainState::new(&t, vec![1.0, 1.0], 0.8, 1.0, substream(2, 0, 0)).unwrap();
        let mut spent = 0;
        for _ in 0..1000 {
            spent += metropolis_step(&mut s, 1.0, &t).unwrap();
        }
        assert_eq!(s.counts(0), (1000, 1000));
        assert_eq!(s.counts(1), (1000, 1000));
        assert_eq!(spent, 2000);
    }

    #[test]
    fn tuning_rules() {
        let t = gaussian();
        let mut s = ChainState::new(&t, vec![5.0], 1.0, 1.0, substream(3, 0, 0)).unwrap();
        s.accepted[0] = 9;
        s.proposed[0] = 10;
        tune_widths(&mut s, AcceptanceBand::default());
        assert_eq!(s.widths()[0], 2.0);
        assert_eq!(s.counts(0), (0, 0));
        s.accepted[0] = 35;
        s.proposed[0] = 100;
        tune_widths(&mut s, AcceptanceBand::default());
        assert_eq!(s.widths()[0], 2.0);
        s.accepted[0] = 1;
        s.proposed[0] = 100;
        tune_widths(&mut s, AcceptanceBand::default());
        assert_eq!(s.widths()[0], 1.0);
        // never proposed: untouched
        tune_widths(&mut s, AcceptanceBand::default());
        assert_eq!(s.widths()[0], 1.0);
    }

    #[test]
    fn tuning_reaches_band_on_gaussian() {
        let t = gaussian();
        // deliberately far too wide
        let mut s = ChainState::new(&t, vec![5.0], 20.0, 1.0, substream(4, 0, 0)).unwrap();
        let band = AcceptanceBand::default();
        let mut entered = None;
        for round in 1..=20 {
            for _ in 0..200 {
                metropolis_step(&mut s, 1.0, &t).unwrap();
            }
            let ratio = s.acceptance_ratio(0).unwrap();
            if (band.low..=band.high).contains(&ratio) {
                entered = Some(round);
                break;
            }
            tune_widths(&mut s, band);
        }
        assert!(entered.is_some(), "acceptance never entered the band");
    }

    #[test]
    fn gaussian_mean_within_three_standard_errors() {
        let t = gaussian();
        let settings = McmcSettings {
            total_steps: 11_000,
            init_steps: 1_000,
            seed: 11,
            ..McmcSettings::default()
        };
        let out = run_mcmc(&t, &settings, None).unwrap();
        let xs: Vec<f64> = out.samples.iter().map(|s| s[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        // standard error inflated by the integrated autocorrelation time
        let tau = integrated_autocorrelation(&xs);
        let se = 0.5 * (tau / n).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean}, se {se}, tau {tau}");
    }

    fn integrated_autocorrelation(xs: &[f64]) -> f64 {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let mut tau = 1.0;
        for lag in 1..n / 10 {
            let c = (0..n - lag)
                .map(|i| (xs[i] - mean) * (xs[i + lag] - mean))
                .sum::<f64>()
                / (n as f64 * var);
            if c < 0.05 {
                break;
            }
            tau += 2.0 * c;
        }
        tau
    }

    #[test]
    fn bookkeeping_and_determinism() {
        let t = gaussian();
        let settings = McmcSettings {
            total_steps: 100,
            init_steps: 20,
            seed: 5,
            trace_every: 10,
            ..McmcSettings::default()
        };
        let a = run_mcmc(&t, &settings, None).unwrap();
        let b = run_mcmc(&t, &settings, None).unwrap();
        assert_eq!(a.samples.len(), 80);
        assert_eq!(a.samples, b.samples);
        // one initial evaluation plus one factorization per proposal
        assert_eq!(a.factorizations, 1 + 100);
        assert_eq!(a.init_factorizations, 1 + 20);
        let steps: Vec<f64> = a.trace.iter().map(|r| r.step_or_gamma).collect();
        assert_eq!(steps, (1..=10).map(|i| (i * 10) as f64).collect::<Vec<_>>());
        assert!(a.trace.windows(2).all(|w| w[0].wall_time_s <= w[1].wall_time_s));
    }

    #[test]
    fn rejects_bad_settings() {
        let t = gaussian();
        let bad = McmcSettings {
            total_steps: 10,
            init_steps: 10,
            ..McmcSettings::default()
        };
        assert!(run_mcmc(&t, &bad, None).is_err());
    }
}
