//! `gptemper` command-line interface: train, predict, benchmark, compare.

pub mod compare;
pub mod model;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gptemper::benchmarks::{run_benchmark, SyntheticProblem};
use gptemper::data::{read_table, select_columns};
use gptemper::trace::{read_trace_csv, write_trace_csv};
use gptemper::{
    load_dataset, train, Dataset, Engine, KernelForm, Matrix, PriorSpec, RunConfig, ScheduleSpec,
};

use crate::compare::{merge_traces, verdict, write_merged};
use crate::model::ModelFile;

#[derive(Debug, Parser)]
#[command(name = "gptemper", version, about = "Fully Bayesian GP regression with tempered SMC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample hyperparameters for a CSV dataset and write a model and a trace.
    Train(TrainArgs),
    /// Predict mean and variance at new inputs with a saved model.
    Predict(PredictArgs),
    /// Run both engines on a synthetic problem.
    Benchmark(BenchmarkArgs),
    /// Merge two traces and summarize how they compare.
    Compare(CompareArgs),
}

/// Engine settings shared by `train` and `benchmark`.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Particles in the ASMC population.
    #[arg(long, default_value_t = 60)]
    pub particles: usize,
    /// Number of evenly spaced temperatures from gamma0 to 1.
    #[arg(long, default_value_t = 10, conflicts_with_all = ["gammas", "adaptive"])]
    pub grid: usize,
    /// Explicit ascending temperatures ending at 1.
    #[arg(long, value_delimiter = ',', conflicts_with = "adaptive")]
    pub gammas: Option<Vec<f64>>,
    /// Choose temperatures adaptively, keeping this fraction of the ESS per step.
    #[arg(long, value_name = "ESS_REDUCTION")]
    pub adaptive: Option<f64>,
    /// Metropolis sweeps per particle at each temperature.
    #[arg(long, default_value_t = 1)]
    pub steps_per_gamma: usize,
    #[arg(long, default_value_t = 0.001)]
    pub gamma0: f64,
    /// Total MCMC sweeps, initialization included.
    #[arg(long, default_value_t = 5800)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub init_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "GPTEMPER_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = KernelForm::ExponentiatedSum)]
    pub kernel: KernelForm,
    /// Base diagonal jitter for Cholesky retries.
    #[arg(long, default_value_t = 1e-10)]
    pub jitter: f64,
    /// MCMC trace cadence in sweeps.
    #[arg(long, default_value_t = 50)]
    pub trace_every: usize,
    /// Ensemble members used for held-out RMSE (0 keeps all).
    #[arg(long, default_value_t = 200)]
    pub predict_samples: usize,
}

impl EngineArgs {
    pub fn to_config(&self, engine: Engine) -> RunConfig {
        let schedule = if let Some(r) = self.adaptive {
            ScheduleSpec::Adaptive { ess_reduction: r }
        } else if let Some(g) = &self.gammas {
            ScheduleSpec::Explicit { gammas: g.clone() }
        } else {
            ScheduleSpec::Grid { count: self.grid }
        };
        RunConfig {
            engine,
            particles: self.particles,
            steps_per_gamma: self.steps_per_gamma,
            schedule,
            gamma0: self.gamma0,
            mcmc_total_steps: self.steps,
            mcmc_init_steps: self.init_steps,
            seed: self.seed,
            workers: self.workers,
            kernel_form: self.kernel,
            jitter: self.jitter,
            trace_every: self.trace_every,
            predict_samples: self.predict_samples,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output columns; every other column is an input.
    #[arg(long, value_delimiter = ',', required = true)]
    pub outputs: Vec<String>,
    /// Fraction of rows held out for RMSE tracing.
    #[arg(long, default_value_t = 0.0)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = Engine::Asmc)]
    pub engine: Engine,
    #[command(flatten)]
    pub engine_args: EngineArgs,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV whose header names the model's input columns.
    #[arg(long)]
    pub inputs: PathBuf,
    #[arg(long, default_value = "predictions.csv")]
    pub out: PathBuf,
    /// Ensemble members to average over (0 keeps all).
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 200)]
    pub train_n: usize,
    #[arg(long, default_value_t = 500)]
    pub test_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "mcmc,asmc")]
    pub engines: Vec<Engine>,
    /// Standard deviation of Gaussian noise added to training and test outputs.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[command(flatten)]
    pub engine_args: EngineArgs,
    #[arg(long, default_value = "benchmark")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Numerator trace of every ratio.
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value = "compare.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "verdict.json")]
    pub verdict: PathBuf,
    /// RMSE level for the time-to-target comparison; defaults to the worse final RMSE.
    #[arg(long)]
    pub target_rmse: Option<f64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn fmt_rmse(r: &Option<Vec<f64>>) -> String {
    match r {
        Some(v) => v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(","),
        None => "-".into(),
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let config = a.engine_args.to_config(a.engine);
    config.validate()?;
    let (train_set, test_set) = load_dataset(&a.data, &a.outputs, a.test_fraction, config.seed)
        .with_context(|| format!("loading {}", a.data.display()))?;
    let priors = PriorSpec::default_for(train_set.input_dim(), train_set.output_dim());
    let test = (!test_set.is_empty()).then_some(&test_set);
    let out = train(&train_set, test, &config, &priors)?;

    let data_bytes = fs::read(&a.data)?;
    let model = ModelFile::build(&train_set, &config, &priors, &out, &data_bytes, a.test_fraction, &a.outputs)?;
    model.write(create(&a.model)?)?;
    write_trace_csv(create(&a.trace)?, &out.trace, test.map(|_| train_set.output_dim()))?;
    println!(
        "{}: {} samples, {} factorizations ({} per worker), held-out rmse {}",
        config.engine,
        out.ensemble.len(),
        out.total_factorizations,
        out.per_worker_factorizations,
        fmt_rmse(&out.final_rmse)
    );
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = ModelFile::read(File::open(&a.model).with_context(|| format!("opening {}", a.model.display()))?)?;
    let train_set = model.training_dataset()?;
    let names = train_set.input_names().to_vec();

    let empty = fs::metadata(&a.inputs)
        .with_context(|| format!("opening {}", a.inputs.display()))?
        .len()
        == 0;
    let raw = if empty {
        Matrix::zeros(0, names.len())
    } else {
        let (header, rows) = read_table(&a.inputs).with_context(|| format!("reading {}", a.inputs.display()))?;
        let extra: Vec<&String> = header
            .iter()
            .filter(|h| !names.contains(h) && !train_set.output_names().contains(h))
            .collect();
        let missing: Vec<&String> = names.iter().filter(|n| !header.contains(n)).collect();
        if !extra.is_empty() || !missing.is_empty() {
            bail!(
                "schema mismatch: model has {} inputs {:?}; file is missing {:?} and has unknown columns {:?}",
                names.len(),
                names,
                missing,
                extra
            );
        }
        select_columns(&header, &rows, &names)?
    };

    let mut w = csv::Writer::from_writer(create(&a.out)?);
    let mut header = Vec::new();
    for name in train_set.output_names() {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_variance"));
    }
    w.write_record(&header)?;
    if raw.rows() > 0 {
        let ensemble = model.ensemble()?.thinned(a.samples);
        let x = train_set.normalization().normalize_inputs(&raw)?;
        let pred = gptemper::predict(&train_set, &ensemble, &x, model.kernel_form, model.jitter)?;
        for i in 0..raw.rows() {
            let mut rec = Vec::with_capacity(header.len());
            for k in 0..train_set.output_dim() {
                rec.push(pred.mean.get(i, k).to_string());
                rec.push(pred.variance.get(i, k).to_string());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let problem = SyntheticProblem::by_name(&a.problem)?.with_noise(a.noise_sd);
    let config = a.engine_args.to_config(Engine::Asmc);
    config.validate()?;
    let report = run_benchmark(&problem, a.train_n, a.test_n, &a.engines, &config, config.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let rmse_cols = (a.test_n > 0).then_some(problem.m);
    for e in &report.engines {
        let path = a.out_dir.join(format!("trace_{}.csv", e.engine));
        write_trace_csv(create(&path)?, &e.trace, rmse_cols)?;
        println!(
            "{:<5} rmse {}  factorizations {} ({} per worker)  {:.2}s",
            e.engine.to_string(),
            fmt_rmse(&e.final_rmse),
            e.total_factorizations,
            e.per_worker_factorizations,
            e.wall_time_s
        );
    }
    let summary = serde_json::json!({
        "problem": report.problem,
        "train_n": report.train_n,
        "test_n": report.test_n,
        "seed": report.seed,
        "config": config,
        "engines": report.engines.iter().map(|e| serde_json::json!({
            "engine": e.engine,
            "final_rmse": e.final_rmse,
            "total_factorizations": e.total_factorizations,
            "per_worker_factorizations": e.per_worker_factorizations,
            "wall_time_s": e.wall_time_s,
            "ensemble_size": e.ensemble_size,
        })).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(create(&a.out_dir.join("summary.json"))?, &summary)?;

    if let (Some(asmc), Some(mcmc)) = (report.engine(Engine::Asmc), report.engine(Engine::Mcmc)) {
        let v = verdict(&asmc.trace, &mcmc.trace, None);
        write_merged(create(&a.out_dir.join("compare.csv"))?, &merge_traces(&asmc.trace, &mcmc.trace))?;
        serde_json::to_writer_pretty(create(&a.out_dir.join("verdict.json"))?, &v)?;
        println!("asmc/mcmc: {}", serde_json::to_string(&v)?);
    }
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let read = |p: &Path| -> Result<_> {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        read_trace_csv(f).with_context(|| format!("reading {}", p.display()))
    };
    let (ta, tb) = (read(&a.a)?, read(&a.b)?);
    if ta.is_empty() || tb.is_empty() {
        bail!("malformed trace: no rows");
    }
    write_merged(create(&a.out)?, &merge_traces(&ta, &tb))?;
    let v = verdict(&ta, &tb, a.target_rmse);
    serde_json::to_writer_pretty(create(&a.verdict)?, &v)?;
    println!("{}", serde_json::to_string(&v)?);
    Ok(())
}

/// The training dataset a model file describes, for callers that only need the data.
pub fn model_dataset(path: &Path) -> Result<Dataset> {
    ModelFile::read(File::open(path)?)?.training_dataset()
}
