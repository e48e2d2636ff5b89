//! Command-line front end. The `lasso-sse` binary only calls [`run`].

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::analysis::{etpg_eigen_diagnostics, report_for_attack};
use crate::harness::{
    long_format, run_batch_experiment, run_observer_experiment, summarize, write_long_format, write_records, write_summary,
    ExperimentConfig, GroupKey, Method, Sweep,
};
use crate::model::{generate_random_instance, Instance, InstanceConfig, StackedModel};
use crate::observer::{run_observer, ObserverConfig, ObserverVariant, WindowShift};
use crate::oracle::{default_tolerance, exact_decode};
use crate::solvers::{
    default_lambda, refine_state, solve_block_hard_with, solve_lasso, write_trace_csv, BlockUpdate, SolverConfig,
};
use crate::{Result, SseError};

#[derive(Debug, Parser)]
#[command(name = "lasso-sse", version, about = "Secure state estimation under sparse sensor attacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance and write it as JSON.
    Generate(GenerateArgs),
    /// Decode the state from one stacked measurement window.
    Solve(SolveArgs),
    /// Print the irrepresentable-condition report of an instance.
    Analyze(AnalyzeArgs),
    /// Run an observer over an instance's trajectory.
    Observe(ObserveArgs),
    /// Run a Monte-Carlo experiment.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub s: usize,
    /// Window length; defaults to n.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with generator settings (ranges, horizon, noise).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub noise_bound: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Lasso,
    Exact,
    EtpgLike,
    EtpgResidual,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// JSON array with a stacked measurement vector; defaults to the
    /// instance's first window.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolveMethod::Lasso)]
    pub method: SolveMethod,
    /// Explicit lambda; otherwise `lambda_scale * critical`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda_scale: f64,
    /// Plain ISTA instead of FISTA.
    #[arg(long)]
    pub ista: bool,
    /// Attack size bound for exact and etpg-like; defaults to the instance's.
    #[arg(long)]
    pub s: Option<usize>,
    /// Per-iteration trace CSV (lasso and etpg-like).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Estimate JSON; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Also compute the restricted eigenvalue diagnostics over subsets of
    /// this many sensors.
    #[arg(long)]
    pub eigen: Option<usize>,
    /// Append a machine-readable row to this CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Soft,
    BlockHard,
    BlockResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowShiftArg {
    Keep,
    ShiftAndZero,
}

#[derive(Debug, Args)]
pub struct ObserveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Soft)]
    pub variant: VariantArg,
    /// Sensors kept by the block-hard variant; defaults to the instance's.
    #[arg(long)]
    pub s_assumed: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = WindowShiftArg::Keep)]
    pub window_shift: WindowShiftArg,
    /// Per-step CSV; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment file (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run the observer experiment instead of the batch one.
    #[arg(long)]
    pub observer: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub noise_bound: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated, e.g. `lasso,exact`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_s: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_p: Option<Vec<usize>>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Batch only: summary CSV grouped by method and the swept variable.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Batch only: plot-ready long-format data.
    #[arg(long)]
    pub long: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Analyze(a) => analyze(a),
        Command::Observe(a) => observe(a),
        Command::Bench(a) => bench(a),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => toml::from_str(&fs::read_to_string(path)?).map_err(|e| SseError::InvalidConfig(e.to_string()))?,
        None => InstanceConfig::default(),
    };
    if args.horizon.is_some() {
        cfg.horizon = args.horizon;
    }
    if let Some(b) = args.noise_bound {
        cfg.noise_bound = b;
    }
    let inst = generate_random_instance(args.n, args.p, args.s, args.tau.unwrap_or(args.n), &cfg, args.seed)?;
    inst.write(&args.out)
}

/// Output of `solve`, shared by every method.
#[derive(Debug, Serialize)]
pub struct EstimateDocument {
    pub method: String,
    pub x_hat: Vec<f64>,
    pub a_hat: Vec<f64>,
    /// Attacked sensors (0-based).
    pub support: Vec<usize>,
    pub support_rows: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub objective: Option<f64>,
    pub residual: f64,
    pub solve_time_seconds: f64,
}

fn read_measurements(path: &Path, model: &StackedModel) -> Result<DVector<f64>> {
    let values: Vec<f64> = serde_json::from_str(&fs::read_to_string(path)?)?;
    if values.len() != model.rows() {
        return Err(SseError::DimensionMismatch(format!(
            "measurement file has {} entries, the window needs p * tau = {}",
            values.len(),
            model.rows()
        )));
    }
    Ok(DVector::from_vec(values))
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = Instance::read(&args.instance)?;
    let (model, y_default, _) = inst.first_window()?;
    let y = match &args.measurements {
        Some(path) => read_measurements(path, &model)?,
        None => y_default,
    };
    let s = args.s.unwrap_or(inst.scenario.support.len());
    let lambda = match args.lambda {
        Some(l) => l,
        None => default_lambda(&model, &y, args.lambda_scale)?,
    };
    let mut config = SolverConfig::new(lambda);
    if args.ista {
        config = config.ista();
    }
    if args.trace.is_some() {
        config = config.with_trace();
    }

    let doc = match args.method {
        SolveMethod::Lasso | SolveMethod::EtpgLike | SolveMethod::EtpgResidual => {
            let est = match args.method {
                SolveMethod::Lasso => solve_lasso(&model, &y, &config)?,
                SolveMethod::EtpgLike => solve_block_hard_with(&model, &y, s, &config, BlockUpdate::Gradient)?,
                _ => solve_block_hard_with(&model, &y, s, &config, BlockUpdate::Residual)?,
            };
            if let Some(path) = &args.trace {
                write_trace_csv(&est.trace, File::create(path)?)?;
            }
            let x_hat = if args.method == SolveMethod::Lasso {
                refine_state(&model, &y, &est.support_hat).unwrap_or_else(|_| est.x_hat.clone())
            } else {
                est.x_hat.clone()
            };
            let residual = (&y - model.omega() * &x_hat - &est.a_hat).norm();
            EstimateDocument {
                method: match args.method {
                    SolveMethod::Lasso => "lasso",
                    SolveMethod::EtpgLike => "etpg_like",
                    _ => "etpg_residual",
                }
                .into(),
                support: est.attacked_sensors(&model),
                support_rows: est.support_hat.clone(),
                x_hat: x_hat.as_slice().to_vec(),
                a_hat: est.a_hat.as_slice().to_vec(),
                converged: est.converged,
                iterations: est.iterations,
                objective: Some(est.objective),
                residual,
                solve_time_seconds: est.solve_time_seconds,
            }
        }
        SolveMethod::Exact => {
            let tol = default_tolerance(&model, &y, inst.scenario.noise_bound);
            let start = std::time::Instant::now();
            let res = exact_decode(&model, &y, s.min(model.p() - 1), tol)?;
            let seconds = start.elapsed().as_secs_f64();
            let fitted = model.omega() * &res.x_exact;
            let mut a_hat = DVector::zeros(model.rows());
            for &i in &res.support_rows {
                a_hat[i] = y[i] - fitted[i];
            }
            EstimateDocument {
                method: "exact".into(),
                x_hat: res.x_exact.as_slice().to_vec(),
                a_hat: a_hat.as_slice().to_vec(),
                support: res.support,
                support_rows: res.support_rows,
                converged: true,
                iterations: 0,
                objective: None,
                residual: res.residual,
                solve_time_seconds: seconds,
            }
        }
    };
    let text = serde_json::to_string_pretty(&doc)?;
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeRow<'a> {
    instance: &'a str,
    rho: f64,
    strict_value: f64,
    sufficient_holds: bool,
    strict_holds: bool,
    full_rank_ok: bool,
    support_rows: String,
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let inst = Instance::read(&args.instance)?;
    let (model, _, a_true) = inst.first_window()?;
    let report = report_for_attack(&model, &a_true)?;
    let rows = report.support.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = io::stdout().lock();
    writeln!(out, "rho = {}", report.rho)?;
    writeln!(out, "strict_value = {}", report.strict_value)?;
    writeln!(out, "sufficient_holds = {}", report.sufficient_holds)?;
    writeln!(out, "strict_holds = {}", report.strict_holds)?;
    writeln!(out, "full_rank_ok = {}", report.full_rank_ok)?;
    writeln!(out, "support_rows = {rows}")?;
    if let Some(k) = args.eigen {
        let d = etpg_eigen_diagnostics(&model, k)?;
        writeln!(out, "q = {}", d.q)?;
        writeln!(out, "r = {}", d.r)?;
        writeln!(out, "r_over_q = {}", d.ratio)?;
    }
    if let Some(path) = &args.csv {
        let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        w.serialize(AnalyzeRow {
            instance: &args.instance.to_string_lossy(),
            rho: report.rho,
            strict_value: report.strict_value,
            sufficient_holds: report.sufficient_holds,
            strict_holds: report.strict_holds,
            full_rank_ok: report.full_rank_ok,
            support_rows: rows,
        })?;
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ObserveRow {
    k: usize,
    state_error: f64,
    support_error: usize,
    step_time_seconds: f64,
}

fn observe(args: ObserveArgs) -> Result<()> {
    let inst = Instance::read(&args.instance)?;
    let model = inst.stacked_model()?;
    let traj = inst.trajectory()?;
    if traj.horizon() < model.tau() {
        return Err(SseError::InvalidConfig(format!(
            "instance horizon {} is shorter than tau = {}",
            traj.horizon(),
            model.tau()
        )));
    }
    let s_assumed = args.s_assumed.unwrap_or(inst.scenario.support.len());
    let variant = match args.variant {
        VariantArg::Soft => ObserverVariant::Soft,
        VariantArg::BlockHard => ObserverVariant::BlockHard { s_assumed },
        VariantArg::BlockResidual => ObserverVariant::BlockResidual { s_assumed },
    };
    let mut cfg = ObserverConfig::calibrated(&model, &traj.stacked_measurements(0, model.tau()), variant)?;
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    if let Some(m) = args.inner_steps {
        cfg.inner_steps = m;
    }
    cfg.window_shift = match args.window_shift {
        WindowShiftArg::Keep => WindowShift::Keep,
        WindowShiftArg::ShiftAndZero => WindowShift::ShiftAndZero,
    };
    let records = run_observer(&model, &traj, &cfg)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = sink;
    writeln!(sink, "# lasso-sse observer-run v1")?;
    let mut w = csv::Writer::from_writer(sink);
    for r in records {
        w.serialize(ObserveRow {
            k: r.k,
            state_error: r.state_error,
            support_error: r.support_error,
            step_time_seconds: r.step_time_seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn parse_method(name: &str) -> Result<Method> {
    serde_json::from_value(serde_json::Value::String(name.trim().replace('-', "_")))
        .map_err(|_| SseError::InvalidConfig(format!("unknown method {name:?}")))
}

/// Loads the experiment file (if any) and applies flag overrides.
pub fn bench_config(args: &BenchArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None if args.observer => ExperimentConfig {
            n: 10,
            p: 15,
            s: 3,
            trials: 20,
            methods: vec![Method::SoftObserver, Method::BlockObserver],
            ..Default::default()
        },
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field.clone() { cfg.$field = v; })*};
    }
    set!(n, p, s, trials, noise_bound, seed, horizon);
    if args.tau.is_some() {
        cfg.tau = args.tau;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(names) = &args.methods {
        cfg.methods = names.iter().map(|n| parse_method(n)).collect::<Result<_>>()?;
    }
    if let Some(values) = &args.sweep_s {
        cfg.sweep = Sweep::S { values: values.clone() };
    }
    if let Some(values) = &args.sweep_p {
        cfg.sweep = Sweep::P { values: values.clone(), s_divisor: Some(5) };
    }
    if args.out.is_some() {
        cfg.output_path = args.out.clone();
    }
    Ok(cfg)
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = bench_config(&args)?;
    if args.observer {
        let exp = run_observer_experiment(&cfg)?;
        let mut out = io::stdout().lock();
        for f in exp.steps.iter().filter(|r| r.k + 1 == cfg.horizon) {
            writeln!(
                out,
                "tau = {:>3}  {:<15} final mean state error {:.3e}  support error {:.2}  step time {:.2e} s",
                f.tau,
                f.method.to_string(),
                f.state_error,
                f.support_error,
                f.step_time_seconds
            )?;
        }
        return Ok(());
    }
    let records = run_batch_experiment(&cfg)?;
    if cfg.output_path.is_none() && args.summary.is_none() {
        write_records(&records, io::stdout().lock())?;
    }
    let (keys, x_key) = match cfg.sweep {
        Sweep::None => (vec![GroupKey::Method], GroupKey::P),
        Sweep::P { .. } => (vec![GroupKey::Method, GroupKey::P, GroupKey::S], GroupKey::P),
        Sweep::S { .. } => (vec![GroupKey::Method, GroupKey::S], GroupKey::S),
    };
    let summary = summarize(&records, &keys)?;
    if let Some(path) = &args.summary {
        write_summary(&summary, File::create(path)?)?;
    }
    if let Some(path) = &args.long {
        write_long_format(&long_format(&summary, x_key), File::create(path)?)?;
    }
    Ok(())
}
