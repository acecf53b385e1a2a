//! Adaptive sequential Monte Carlo over the tempered family.
//!
//! A population of Metropolis chains is carried from `γ₀ ≈ 0` to `γ = 1`. At every
//! temperature each particle takes a fixed number of sweeps and retunes its
//! proposal widths; the population is then reweighted to the next temperature
//! (from cached log-likelihoods, no factorizations) and resampled systematically.
//!
//! The next temperature comes either from a fixed grid or from bisection on the
//! effective sample size, so that each step loses a fixed fraction of it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{metropolis_step, tune_widths, AcceptanceBand, ChainState};
use crate::rng::{substream, COORDINATOR};
use crate::target::Target;
use crate::trace::{Probe, Stopwatch, TraceRow};

/// Bisection tolerance on `γ`.
pub const GAMMA_TOLERANCE: f64 = 1e-6;
const MAX_BISECTIONS: usize = 60;

/// How the inverse temperatures are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperSchedule {
    /// Strictly ascending, positive, ending at exactly 1.
    Grid(Vec<f64>),
    /// Each step keeps `ess_reduction` of the current effective sample size.
    Adaptive { gamma0: f64, ess_reduction: f64 },
}

impl TemperSchedule {
    /// `count` equally spaced values from `gamma0` to 1 inclusive.
    pub fn uniform_grid(gamma0: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config(format!("grid needs at least 2 values, got {count}")));
        }
        let step = (1.0 - gamma0) / (count - 1) as f64;
        let mut g: Vec<f64> = (0..count).map(|i| gamma0 + step * i as f64).collect();
        g[count - 1] = 1.0;
        Self::grid(g)
    }

    pub fn grid(gammas: Vec<f64>) -> Result<Self> {
        let ok = gammas.len() >= 2
            && gammas[0] > 0.0
            && gammas.windows(2).all(|w| w[0] < w[1])
            && *gammas.last().unwrap() == 1.0;
        if !ok {
            return Err(Error::Config(format!(
                "grid must be strictly ascending from a positive value to exactly 1: {gammas:?}"
            )));
        }
        Ok(TemperSchedule::Grid(gammas))
    }

    pub fn adaptive(gamma0: f64, ess_reduction: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0 < 1.0) {
            return Err(Error::Config(format!("gamma0 {gamma0} outside (0, 1)")));
        }
        if !(ess_reduction > 0.0 && ess_reduction < 1.0) {
            return Err(Error::Config(format!("ess_reduction {ess_reduction} outside (0, 1)")));
        }
        Ok(TemperSchedule::Adaptive {
            gamma0,
            ess_reduction,
        })
    }

    pub fn first(&self) -> f64 {
        match self {
            TemperSchedule::Grid(g) => g[0],
            TemperSchedule::Adaptive { gamma0, .. } => *gamma0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TemperSchedule::Grid(g) => format!("grid({} values from {})", g.len(), g[0]),
            TemperSchedule::Adaptive {
                gamma0,
                ess_reduction,
            } => format!("adaptive(gamma0={gamma0}, ess_reduction={ess_reduction})"),
        }
    }
}

/// A weighted chain.
#[derive(Clone, Debug)]
pub struct Particle {
    pub chain: ChainState,
    pub log_weight: f64,
}

/// Normalizes in place so that `Σ exp(w) = 1`.
pub fn normalize_log_weights(log_weights: &mut [f64]) -> Result<()> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePopulation);
    }
    let log_sum = max + log_weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    log_weights.iter_mut().for_each(|w| *w -= log_sum);
    Ok(())
}

/// Normalized weights from unnormalized log-weights.
pub fn weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePopulation);
    }
    let w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// `1 / Σ w_j²` of the normalized weights, computed as `(Σ v)² / Σ v²` on the
/// max-shifted weights so equal weights give exactly `N` and one-hot exactly 1.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePopulation);
    }
    let (s, s2) = log_weights.iter().fold((0.0, 0.0), |(s, s2), l| {
        let v = (l - max).exp();
        (s + v, s2 + v * v)
    });
    Ok((s * s / s2).clamp(1.0, log_weights.len() as f64))
}

fn shifted(log_weights: &[f64], log_likelihoods: &[f64], delta: f64) -> Vec<f64> {
    log_weights
        .iter()
        .zip(log_likelihoods)
        .map(|(w, l)| if delta == 0.0 { *w } else { w + delta * l })
        .collect()
}

/// ESS after moving from `gamma_from` to `gamma_to`.
pub fn ess_at(log_weights: &[f64], log_likelihoods: &[f64], gamma_from: f64, gamma_to: f64) -> Result<f64> {
    ess(&shifted(log_weights, log_likelihoods, gamma_to - gamma_from))
}

/// The `γ` in `(gamma_i, 1]` at which the ESS equals `ess_reduction` times the current
/// one, by bisection to [`GAMMA_TOLERANCE`]; 1 when even `γ = 1` keeps enough ESS.
pub fn next_gamma_adaptive(
    log_weights: &[f64],
    log_likelihoods: &[f64],
    gamma_i: f64,
    ess_reduction: f64,
) -> Result<f64> {
    let current = ess(log_weights)?;
    let target = ess_reduction * current;
    let g = |gamma: f64| -> Result<f64> {
        Ok(ess_at(log_weights, log_likelihoods, gamma_i, gamma)? - target)
    };
    if g(1.0)? >= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (gamma_i, 1.0);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= GAMMA_TOLERANCE {
            break;
        }
    }
    let next = 0.5 * (lo + hi);
    Ok(if next > gamma_i { next } else { hi })
}

/// Adds `(gamma_to - gamma_from) · log L(θ_j)` to every log-weight and renormalizes.
pub fn reweight(particles: &mut [Particle], gamma_from: f64, gamma_to: f64) -> Result<()> {
    let delta = gamma_to - gamma_from;
    if delta != 0.0 {
        for p in particles.iter_mut() {
            p.log_weight += delta * p.chain.log_likelihood();
        }
    }
    let mut lw: Vec<f64> = particles.iter().map(|p| p.log_weight).collect();
    normalize_log_weights(&mut lw)?;
    for (p, w) in particles.iter_mut().zip(lw) {
        p.log_weight = w;
    }
    Ok(())
}

/// Systematic resampling: parent index for each of the `N` offspring, using the
/// single uniform `u ∈ [0, 1)` to place the comb `(u + j) / N`.
pub fn systematic_parents(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let mut parents = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for j in 0..n {
        let point = (u + j as f64) / n as f64;
        while point >= cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        parents.push(i);
    }
    parents
}

/// Resamples to an equally weighted population. Offspring inherit their parent's
/// state (widths included); callers reseed their streams afterwards.
pub fn resample<R: Rng + ?Sized>(particles: &[Particle], rng: &mut R) -> Result<Vec<Particle>> {
    let lw: Vec<f64> = particles.iter().map(|p| p.log_weight).collect();
    let w = weights(&lw)?;
    let parents = systematic_parents(&w, rng.random::<f64>());
    let equal = -(particles.len() as f64).ln();
    Ok(parents
        .into_iter()
        .map(|i| Particle {
            chain: particles[i].chain.clone(),
            log_weight: equal,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsmcSettings {
    pub particles: usize,
    /// Metropolis sweeps per particle at each temperature.
    pub steps_per_gamma: usize,
    pub schedule: TemperSchedule,
    pub seed: u64,
    pub workers: usize,
    pub initial_width: f64,
    pub band: AcceptanceBand,
}

impl Default for AsmcSettings {
    fn default() -> Self {
        Self {
            particles: 60,
            steps_per_gamma: 1,
            schedule: TemperSchedule::uniform_grid(0.001, 10).expect("valid default grid"),
            seed: 0,
            workers: 1,
            initial_width: 0.5,
            band: AcceptanceBand::default(),
        }
    }
}

impl AsmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.steps_per_gamma == 0 || self.workers == 0 {
            return Err(Error::Config(
                "particles, steps_per_gamma and workers must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One visited temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperLevel {
    pub gamma: f64,
    /// ESS of the population at the previous temperature, after its resampling.
    pub ess_previous: f64,
    /// ESS after reweighting to `gamma`, before resampling.
    pub ess_reweighted: f64,
}

#[derive(Clone, Debug)]
pub struct AsmcOutcome {
    /// Final population at `γ = 1`, equally weighted.
    pub samples: Vec<Vec<f64>>,
    pub levels: Vec<TemperLevel>,
    pub trace: Vec<TraceRow>,
    /// Cumulative factorizations of each population slot.
    pub slot_factorizations: Vec<u64>,
    pub workers: usize,
}

impl AsmcOutcome {
    pub fn total_factorizations(&self) -> u64 {
        self.slot_factorizations.iter().sum()
    }

    /// Factorizations of the busiest worker when slots are dealt out in contiguous chunks.
    pub fn per_worker_factorizations(&self) -> u64 {
        per_worker_max(&self.slot_factorizations, self.workers)
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.gamma).collect()
    }
}

pub fn per_worker_max(slot_counts: &[u64], workers: usize) -> u64 {
    let chunk = slot_counts.len().div_ceil(workers.max(1)).max(1);
    slot_counts
        .chunks(chunk)
        .map(|c| c.iter().sum::<u64>())
        .max()
        .unwrap_or(0)
}

/// Runs `work` on every particle. Results are collected in particle order.
fn map_particles<F>(particles: &mut [Particle], pool: &Pool, work: F) -> Result<Vec<u64>>
where
    F: Fn(usize, &mut Particle) -> Result<u64> + Sync + Send,
{
    pool.run(particles, work)
}

#[cfg(feature = "parallel")]
struct Pool(rayon::ThreadPool);

#[cfg(feature = "parallel")]
impl Pool {
    fn new(workers: usize) -> Result<Self> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(Pool)
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
    }

    fn run<F>(&self, particles: &mut [Particle], work: F) -> Result<Vec<u64>>
    where
        F: Fn(usize, &mut Particle) -> Result<u64> + Sync + Send,
    {
        use rayon::prelude::*;
        self.0.install(|| {
            particles
                .par_iter_mut()
                .enumerate()
                .map(|(j, p)| work(j, p))
                .collect()
        })
    }
}

#[cfg(not(feature = "parallel"))]
struct Pool;

#[cfg(not(feature = "parallel"))]
impl Pool {
    fn new(_workers: usize) -> Result<Self> {
        Ok(Pool)
    }

    fn run<F>(&self, particles: &mut [Particle], work: F) -> Result<Vec<u64>>
    where
        F: Fn(usize, &mut Particle) -> Result<u64> + Sync + Send,
    {
        particles
            .iter_mut()
            .enumerate()
            .map(|(j, p)| work(j, p))
            .collect()
    }
}

fn weighted_mean_log_target(particles: &[Particle]) -> f64 {
    particles
        .iter()
        .map(|p| p.log_weight.exp() * p.chain.density().tempered_log_target)
        .sum()
}

/// Runs the tempered population from the schedule's first `γ` to 1.
///
/// Each particle's randomness at temperature index `t` comes from the substream
/// `(seed, t, j)`, so results do not depend on the worker count.
pub fn run_asmc<T: Target>(
    target: &T,
    settings: &AsmcSettings,
    probe: Option<&dyn Probe>,
) -> Result<AsmcOutcome> {
    settings.validate()?;
    let n = settings.particles;
    let pool = Pool::new(settings.workers)?;
    let mut clock = Stopwatch::start();
    let mut stage: u64 = 0;
    let mut gamma = settings.schedule.first();
    let mut slot_factorizations = vec![0u64; n];

    let init: Vec<Result<Particle>> = (0..n)
        .map(|j| {
            let mut rng = substream(settings.seed, stage, j as u64);
            let theta = target.sample_initial(&mut rng);
            let chain = ChainState::new(target, theta, settings.initial_width, gamma, rng)?;
            Ok(Particle {
                chain,
                log_weight: -(n as f64).ln(),
            })
        })
        .collect();
    let mut particles = init.into_iter().collect::<Result<Vec<_>>>()?;
    for (slot, p) in slot_factorizations.iter_mut().zip(&particles) {
        *slot += p.chain.evaluation().factorizations;
    }

    let mut levels = vec![TemperLevel {
        gamma,
        ess_previous: n as f64,
        ess_reweighted: n as f64,
    }];
    let mut trace = Vec::new();
    let mut grid_pos = 0;

    loop {
        let steps = settings.steps_per_gamma;
        let band = settings.band;
        let g = gamma;
        let spent = map_particles(&mut particles, &pool, |_, p| {
            let mut total = 0;
            for _ in 0..steps {
                total += metropolis_step(&mut p.chain, g, target)?;
            }
            tune_widths(&mut p.chain, band);
            Ok(total)
        })?;
        for (slot, s) in slot_factorizations.iter_mut().zip(spent) {
            *slot += s;
        }

        clock.pause();
        let rmse = match probe {
            Some(probe) => {
                let thetas: Vec<&[f64]> = particles.iter().map(|p| p.chain.theta()).collect();
                let w: Vec<f64> = particles.iter().map(|p| p.log_weight.exp()).collect();
                Some(probe.rmse(&thetas, &w)?)
            }
            None => None,
        };
        trace.push(TraceRow {
            wall_time_s: clock.elapsed(),
            step_or_gamma: gamma,
            ess: Some(levels.last().expect("non-empty").ess_reweighted),
            log_target_mean: weighted_mean_log_target(&particles),
            factorizations: per_worker_max(&slot_factorizations, settings.workers),
            rmse,
        });
        clock.resume();

        if gamma >= 1.0 {
            break;
        }

        let lw: Vec<f64> = particles.iter().map(|p| p.log_weight).collect();
        let ess_previous = ess(&lw)?;
        let next = match &settings.schedule {
            TemperSchedule::Grid(grid) => {
                grid_pos += 1;
                grid[grid_pos]
            }
            TemperSchedule::Adaptive { ess_reduction, .. } => {
                let ll: Vec<f64> = particles.iter().map(|p| p.chain.log_likelihood()).collect();
                next_gamma_adaptive(&lw, &ll, gamma, *ess_reduction)?
            }
        };
        reweight(&mut particles, gamma, next)?;
        let lw: Vec<f64> = particles.iter().map(|p| p.log_weight).collect();
        levels.push(TemperLevel {
            gamma: next,
            ess_previous,
            ess_reweighted: ess(&lw)?,
        });

        stage += 1;
        let mut resampled = resample(&particles, &mut substream(settings.seed, stage, COORDINATOR))?;
        for (j, p) in resampled.iter_mut().enumerate() {
            p.chain.reseed(substream(settings.seed, stage, j as u64));
            p.chain.set_gamma(next);
        }
        particles = resampled;
        gamma = next;
    }

    Ok(AsmcOutcome {
        samples: particles.iter().map(|p| p.chain.theta().to_vec()).collect(),
        levels,
        trace,
        slot_factorizations,
        workers: settings.workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Evaluation;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn ess_examples() {
        assert!((ess(&[0.0; 7]).unwrap() - 7.0).abs() < 1e-12);
        assert_eq!(ess(&[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(), 1.0);
        let lw = [0.5f64.ln(), 0.25f64.ln(), 0.25f64.ln()];
        assert!((ess(&lw).unwrap() - 8.0 / 3.0).abs() < 1e-12);
        assert!(matches!(ess(&[f64::NEG_INFINITY; 3]), Err(Error::DegeneratePopulation)));
    }

    #[test]
    fn reweight_two_particles() {
        let lw = [0.0, 0.0];
        let ll = [0.0, -2.0];
        let w = weights(&shifted(&lw, &ll, 0.5)).unwrap();
        let e = (-1f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!((w[0] - 0.731).abs() < 5e-4);
    }

    #[test]
    fn adaptive_gamma_limits() {
        // identical likelihoods: no ESS decay, jump straight to 1
        assert_eq!(next_gamma_adaptive(&[0.0; 4], &[-3.0; 4], 0.1, 0.5).unwrap(), 1.0);
        // reduction close to 1: tiny step
        let ll = [0.0, -50.0, -100.0, -10.0];
        let g = next_gamma_adaptive(&[0.0; 4], &ll, 0.2, 0.999_999).unwrap();
        assert!(g > 0.2 && g < 0.2 + 1e-4, "{g}");
    }

    #[test]
    fn adaptive_gamma_matches_scan() {
        // two particles, ll = (0, -1), target ESS 1.6 out of 2
        let ll = [0.0, -1.0];
        let g = next_gamma_adaptive(&[0.0, 0.0], &ll, 0.0, 0.8).unwrap();
        // the scan oracle: first γ on a 1e-4 grid where ESS drops below 1.6
        let mut scan = None;
        for i in 0..=10_000 {
            let gamma = i as f64 * 1e-4;
            if ess_at(&[0.0, 0.0], &ll, 0.0, gamma).unwrap() < 1.6 {
                scan = Some(gamma);
                break;
            }
        }
        // ESS(1) = (1 + e⁻¹)² / (1 + e⁻²) ≈ 1.648 > 1.6: no root in (0, 1], so both give 1
        assert_eq!(scan, None);
        assert_eq!(g, 1.0);

        let ll = [0.0, -5.0];
        let g = next_gamma_adaptive(&[0.0, 0.0], &ll, 0.0, 0.8).unwrap();
        let scan = (0..=10_000)
            .map(|i| i as f64 * 1e-4)
            .find(|&gamma| ess_at(&[0.0, 0.0], &ll, 0.0, gamma).unwrap() < 1.6)
            .unwrap();
        assert!((g - scan).abs() <= 1e-4, "{g} vs {scan}");
        assert!((ess_at(&[0.0, 0.0], &ll, 0.0, g).unwrap() - 1.6).abs() < 1e-5);
    }

    #[test]
    fn systematic_examples() {
        assert_eq!(systematic_parents(&[0.25; 4], 0.3), vec![0, 1, 2, 3]);
        assert_eq!(systematic_parents(&[1.0, 0.0, 0.0], 0.999), vec![0, 0, 0]);
        assert_eq!(systematic_parents(&[0.0, 0.0, 1.0], 0.0), vec![2, 2, 2]);
    }

    #[test]
    fn systematic_offspring_means() {
        let w = [0.5, 0.3, 0.2];
        let reps = 10_000;
        let mut counts = [0usize; 3];
        for seed in 0..reps {
            let u: f64 = substream(seed, 0, 0).random();
            for p in systematic_parents(&w, u) {
                counts[p] += 1;
            }
        }
        for (c, expect) in counts.iter().zip([1.5, 0.9, 0.6]) {
            let mean = *c as f64 / reps as f64;
            assert!((mean - expect).abs() / expect < 0.02, "{mean} vs {expect}");
        }
    }

    #[test]
    fn grid_validation() {
        let g = TemperSchedule::uniform_grid(0.001, 10).unwrap();
        match &g {
            TemperSchedule::Grid(v) => {
                assert_eq!(v.len(), 10);
                assert_eq!(v[0], 0.001);
                assert_eq!(v[9], 1.0);
            }
            _ => unreachable!(),
        }
        assert!(TemperSchedule::uniform_grid(0.1, 1).is_err());
        assert!(TemperSchedule::grid(vec![0.5, 0.4, 1.0]).is_err());
        assert!(TemperSchedule::grid(vec![0.0, 1.0]).is_err());
        assert!(TemperSchedule::grid(vec![0.1, 0.9]).is_err());
        assert!(TemperSchedule::adaptive(0.001, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn ess_bounds(lw in proptest::collection::vec(-30.0..0.0f64, 1..50)) {
            let e = ess(&lw).unwrap();
            prop_assert!(e >= 1.0 - 1e-12 && e <= lw.len() as f64 + 1e-9);
        }

        #[test]
        fn systematic_counts_are_floor_or_ceil(
            raw in proptest::collection::vec(0.0..1.0f64, 1..30),
            u in 0.0..1.0f64,
        ) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 0.0);
            let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let parents = systematic_parents(&w, u);
            prop_assert_eq!(parents.len(), w.len());
            let n = w.len() as f64;
            for (i, wi) in w.iter().enumerate() {
                let c = parents.iter().filter(|&&p| p == i).count() as f64;
                prop_assert!(c >= (wi * n).floor() - 1.0 && c <= (wi * n).ceil() + 1.0);
            }
        }
    }

    /// Likelihood that does not depend on θ.
    struct Flat;

    impl Target for Flat {
        fn dim(&self) -> usize {
            1
        }
        fn free_indices(&self) -> &[usize] {
            &[0]
        }
        fn evaluate(&self, _theta: &[f64]) -> Result<Evaluation> {
            Ok(Evaluation {
                blocks: vec![-1.0],
                factorizations: 1,
            })
        }
        fn log_prior(&self, theta: &[f64]) -> f64 {
            -theta[0]
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
            vec![rng.random::<f64>() + 0.5]
        }
    }

    #[test]
    fn adaptive_on_flat_likelihood_jumps_to_one() {
        let settings = AsmcSettings {
            particles: 16,
            schedule: TemperSchedule::adaptive(0.001, 0.5).unwrap(),
            ..AsmcSettings::default()
        };
        let out = run_asmc(&Flat, &settings, None).unwrap();
        assert_eq!(out.gammas(), vec![0.001, 1.0]);
        assert_eq!(out.samples.len(), 16);
    }

    #[test]
    fn grid_sweep_accounting() {
        let settings = AsmcSettings {
            particles: 8,
            steps_per_gamma: 3,
            workers: 2,
            schedule: TemperSchedule::uniform_grid(0.01, 10).unwrap(),
            ..AsmcSettings::default()
        };
        let out = run_asmc(&Flat, &settings, None).unwrap();
        assert_eq!(out.levels.len(), 10);
        assert_eq!(out.trace.len(), 10);
        // initial evaluation + 10 levels x 3 sweeps x 1 scalar
        assert!(out.slot_factorizations.iter().all(|&c| c == 1 + 30));
        assert_eq!(out.per_worker_factorizations(), 4 * 31);
        let g = out.gammas();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn per_worker_chunks() {
        // chunks of 3: [1, 2, 3] and [4, 5]
        assert_eq!(per_worker_max(&[1, 2, 3, 4, 5], 2), 9);
        assert_eq!(per_worker_max(&[1, 2, 3, 4, 5], 5), 5);
        assert_eq!(per_worker_max(&[1, 2, 3, 4, 5], 8), 5);
        assert_eq!(per_worker_max(&[1, 2, 3, 4, 5], 1), 15);
    }
}
