//! Command-line interface.
//!
//! Every command writes a deterministic text output: comment lines
//! starting with `#` (tool version, a replay line holding the fully
//! resolved flags, dataset notes), then a header row and data rows.
//! Numeric data is printed with 17 significant digits so values
//! round-trip exactly; rerunning a replay line reproduces the output
//! byte for byte.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when
//! `theory --beta` finds the admissibility condition violated.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::experiments::{
    sweep_beta, sweep_epsilon, sweep_length, ExperimentConfig, ExperimentError,
};
use crate::solver::{run_seeded, SolverError};
use crate::sources::dataset::{load_csv_matrix, parse_column_select, CsvLoadError, CsvOptions};
use crate::sources::{
    make_rng, MeasurementSource, RowOrder, SourceError, SourceKind, SourceSpec,
};
use crate::theory::{
    estimate_w, max_beta_for_spectrum, rate_constants, TheoryError, WSamples,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_ADMISSIBLE: i32 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Dataset(#[from] CsvLoadError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Parser, Debug)]
#[command(
    name = "ohbk",
    version,
    about = "Online Kaczmarz signal recovery with heavy-ball momentum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver trajectory and emit t,error rows.
    Run(RunArgs),
    /// Sweep the momentum grid; per beta, summarize the recovery error
    /// at a fixed step over paired trials.
    SweepBeta(SweepBetaArgs),
    /// Sweep measurement coherence: entries drawn U[eps, 1) for each
    /// eps on a grid, against a list of momentum values.
    SweepEps(SweepEpsArgs),
    /// Sweep signal dimension against the momentum grid.
    SweepN(SweepNArgs),
    /// Report W spectrum, the admissibility condition, and rate
    /// constants; exits 2 if --beta fails the condition.
    Theory(TheoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceChoice {
    Gaussian,
    Uniform,
    Sphere,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RowModeChoice {
    /// Rows in file order, wrapping around.
    Cyclic,
    /// A uniformly random row each step.
    Random,
    /// Rows in file order, once; the run stops at the end of the file.
    Once,
}

impl RowModeChoice {
    fn order(self) -> RowOrder {
        match self {
            RowModeChoice::Cyclic => RowOrder::Cyclic,
            RowModeChoice::Random => RowOrder::UniformRandom,
            RowModeChoice::Once => RowOrder::StreamOnce,
        }
    }

    fn name(self) -> &'static str {
        match self {
            RowModeChoice::Cyclic => "cyclic",
            RowModeChoice::Random => "random",
            RowModeChoice::Once => "once",
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Measurement distribution [default: uniform].
    #[arg(long, value_enum)]
    source: Option<SourceChoice>,
    /// Signal dimension for synthetic sources [default: 50].
    #[arg(long)]
    n: Option<usize>,
    /// Lower bound of uniform entries [default: 0].
    #[arg(long)]
    lo: Option<f64>,
    /// Exclusive upper bound of uniform entries [default: 1].
    #[arg(long)]
    hi: Option<f64>,
    /// Dataset file for --source csv.
    #[arg(long)]
    csv_path: Option<PathBuf>,
    /// Row schedule for --source csv [default: cyclic].
    #[arg(long, value_enum)]
    row_mode: Option<RowModeChoice>,
    /// Field delimiter for --source csv [default: ,].
    #[arg(long)]
    delimiter: Option<char>,
    /// Skip the first record of the file.
    #[arg(long)]
    skip_header: bool,
    /// Rows containing a cell equal to this token are dropped
    /// [default: ?].
    #[arg(long)]
    missing_token: Option<String>,
    /// Columns used as measurement entries: all, drop-first, or a
    /// zero-based list like 0,3,5-9 [default: drop-first].
    #[arg(long)]
    columns: Option<String>,
    /// Stream seed. Multi-trial commands run trial i at seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Momentum parameter.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Measurements to consume [default: 1000, or one full pass for
    /// --row-mode once].
    #[arg(long)]
    iters: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepBetaArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 0.0)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.6)]
    beta_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 25)]
    beta_steps: usize,
    /// Paired trials per grid point.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Step at which the recovery error is summarized.
    #[arg(long, default_value_t = 100)]
    error_at: usize,
    /// Measurements per run [default: --error-at].
    #[arg(long)]
    iters: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepEpsArgs {
    /// Signal dimension.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Base seed; trial i runs at seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    eps_min: f64,
    #[arg(long, default_value_t = 0.95)]
    eps_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 21)]
    eps_steps: usize,
    /// Momentum values, comma separated.
    #[arg(long, default_value = "0.0,0.1,0.3,0.5")]
    betas: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 4000)]
    iters: usize,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepNArgs {
    /// Synthetic measurement distribution [default: uniform].
    #[arg(long, value_enum)]
    source: Option<SourceChoice>,
    /// Lower bound of uniform entries [default: 0].
    #[arg(long)]
    lo: Option<f64>,
    /// Exclusive upper bound of uniform entries [default: 1].
    #[arg(long)]
    hi: Option<f64>,
    /// Base seed; trial i runs at seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Signal dimensions, comma separated.
    #[arg(long, default_value = "50,100,500,1000")]
    n_set: String,
    #[arg(long, default_value_t = 0.0)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.6)]
    beta_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 25)]
    beta_steps: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 4000)]
    iters: usize,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    /// Use the exact isotropic W = I/n (sphere or Gaussian directions).
    #[arg(long)]
    closed_form: bool,
    /// Estimate W by Monte Carlo over this many draws from the source.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[command(flatten)]
    source: SourceArgs,
    /// Momentum value to check against the admissibility condition.
    #[arg(long)]
    beta: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses argv and executes; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepBeta(args) => cmd_sweep_beta(args),
        Command::SweepEps(args) => cmd_sweep_eps(args),
        Command::SweepN(args) => cmd_sweep_n(args),
        Command::Theory(args) => cmd_theory(args),
    }
}

/// 17 significant digits: enough for exact f64 round trips.
fn fmt_g(x: f64) -> String {
    format!("{x:.16e}")
}

fn quote(s: &str) -> String {
    if s.is_empty() || s.contains(char::is_whitespace) || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\\\""))
    } else {
        s.to_string()
    }
}

fn version_line() -> String {
    format!("# ohbk {}\n", env!("CARGO_PKG_VERSION"))
}

fn write_output(content: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Inclusive linear grid; the last point is set to `max` exactly.
fn linspace(min: f64, max: f64, steps: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Usage(format!("{what} grid needs at least 1 step")));
    }
    if !min.is_finite() || !max.is_finite() || min > max {
        return Err(CliError::Usage(format!(
            "bad {what} grid bounds: {min} .. {max}"
        )));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let mut grid: Vec<f64> = (0..steps)
        .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
        .collect();
    grid[steps - 1] = max;
    Ok(grid)
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("cannot parse {what} list {text:?}"))),
    }
}

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let values: Result<Vec<usize>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("cannot parse {what} list {text:?}"))),
    }
}

struct ResolvedSource {
    kind: SourceKind,
    dim: usize,
    seed: u64,
    /// Canonical flag text for the replay line, defaults made explicit.
    replay: String,
    dataset_note: Option<String>,
}

fn forbid_csv_flags(args: &SourceArgs, source_name: &str) -> Result<(), CliError> {
    let offending = [
        ("csv-path", args.csv_path.is_some()),
        ("row-mode", args.row_mode.is_some()),
        ("delimiter", args.delimiter.is_some()),
        ("skip-header", args.skip_header),
        ("missing-token", args.missing_token.is_some()),
        ("columns", args.columns.is_some()),
    ];
    for (flag, present) in offending {
        if present {
            return Err(CliError::Usage(format!(
                "--{flag} only applies to --source csv, not --source {source_name}"
            )));
        }
    }
    Ok(())
}

fn forbid_range_flags(args: &SourceArgs, source_name: &str) -> Result<(), CliError> {
    if args.lo.is_some() || args.hi.is_some() {
        return Err(CliError::Usage(format!(
            "--lo/--hi only apply to --source uniform, not --source {source_name}"
        )));
    }
    Ok(())
}

fn resolve_source(args: &SourceArgs) -> Result<ResolvedSource, CliError> {
    let choice = args.source.unwrap_or(SourceChoice::Uniform);
    let seed = args.seed;
    match choice {
        SourceChoice::Uniform => {
            forbid_csv_flags(args, "uniform")?;
            let dim = args.n.unwrap_or(50);
            let lo = args.lo.unwrap_or(0.0);
            let hi = args.hi.unwrap_or(1.0);
            Ok(ResolvedSource {
                kind: SourceKind::Uniform { lo, hi },
                dim,
                seed,
                replay: format!("--source uniform --n {dim} --lo {lo} --hi {hi} --seed {seed}"),
                dataset_note: None,
            })
        }
        SourceChoice::Gaussian | SourceChoice::Sphere => {
            let name = if choice == SourceChoice::Gaussian { "gaussian" } else { "sphere" };
            forbid_csv_flags(args, name)?;
            forbid_range_flags(args, name)?;
            let dim = args.n.unwrap_or(50);
            let kind = if choice == SourceChoice::Gaussian {
                SourceKind::Gaussian
            } else {
                SourceKind::UnitSphere
            };
            Ok(ResolvedSource {
                kind,
                dim,
                seed,
                replay: format!("--source {name} --n {dim} --seed {seed}"),
                dataset_note: None,
            })
        }
        SourceChoice::Csv => {
            forbid_range_flags(args, "csv")?;
            if args.n.is_some() {
                return Err(CliError::Usage(
                    "--n is derived from the CSV columns; do not pass it with --source csv"
                        .to_string(),
                ));
            }
            let path = args.csv_path.as_ref().ok_or_else(|| {
                CliError::Usage("--source csv requires --csv-path".to_string())
            })?;
            let delimiter_char = args.delimiter.unwrap_or(',');
            if !delimiter_char.is_ascii() {
                return Err(CliError::Usage(format!(
                    "delimiter {delimiter_char:?} must be a single ASCII character"
                )));
            }
            let missing = args.missing_token.clone().unwrap_or_else(|| "?".to_string());
            let columns_spec = args.columns.clone().unwrap_or_else(|| "drop-first".to_string());
            let options = CsvOptions {
                delimiter: delimiter_char as u8,
                skip_header: args.skip_header,
                missing_token: missing.clone(),
                columns: parse_column_select(&columns_spec)?,
            };
            let data = Arc::new(load_csv_matrix(path, &options)?);
            let mode = args.row_mode.unwrap_or(RowModeChoice::Cyclic);
            let dim = data.ncols();
            let note = format!(
                "# dataset: rows={} cols={} dropped={}\n",
                data.nrows(),
                data.ncols(),
                data.dropped_rows()
            );
            let skip = if args.skip_header { "--skip-header " } else { "" };
            let replay = format!(
                "--source csv --csv-path {} --row-mode {} --delimiter {} {skip}--missing-token {} --columns {} --seed {seed}",
                quote(&path.display().to_string()),
                mode.name(),
                quote(&delimiter_char.to_string()),
                quote(&missing),
                quote(&columns_spec),
            );
            Ok(ResolvedSource {
                kind: SourceKind::Dataset { data, order: mode.order() },
                dim,
                seed,
                replay,
                dataset_note: Some(note),
            })
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32, CliError> {
    let src = resolve_source(&args.source)?;
    let default_iters = match &src.kind {
        SourceKind::Dataset { data, order: RowOrder::StreamOnce } => data.nrows(),
        _ => 1000,
    };
    let iters = args.iters.unwrap_or(default_iters);
    if iters == 0 {
        return Err(CliError::Usage("--iters must be at least 1".to_string()));
    }
    let spec = SourceSpec::new(src.kind.clone(), src.dim, src.seed)?;
    let traj = run_seeded(&spec, args.beta, iters, 1)?;

    let mut out = version_line();
    out.push_str(&format!(
        "# replay: run {} --beta {} --iters {iters}\n",
        src.replay, args.beta
    ));
    if let Some(note) = &src.dataset_note {
        out.push_str(note);
    }
    out.push_str(&format!("# consumed = {}\n", traj.consumed));
    out.push_str(&format!("# skipped = {}\n", traj.skipped));
    out.push_str("t,error\n");
    for (t, e) in traj.recorded_steps().iter().zip(&traj.errors) {
        out.push_str(&format!("{t},{}\n", fmt_g(*e)));
    }
    write_output(&out, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_sweep_beta(args: SweepBetaArgs) -> Result<i32, CliError> {
    let src = resolve_source(&args.source)?;
    if args.error_at == 0 {
        return Err(CliError::Usage("--error-at must be at least 1".to_string()));
    }
    let iters = args.iters.unwrap_or(args.error_at);
    let betas = linspace(args.beta_min, args.beta_max, args.beta_steps, "beta")?;
    let config = ExperimentConfig {
        kind: src.kind.clone(),
        dim: src.dim,
        betas,
        trials: args.trials,
        iters,
        base_seed: src.seed,
        record_every: args.error_at,
    };
    let sweep = sweep_beta(&config, args.error_at)?;

    let mut out = version_line();
    out.push_str(&format!(
        "# replay: sweep-beta {} --beta-min {} --beta-max {} --beta-steps {} --trials {} --error-at {} --iters {iters}\n",
        src.replay, args.beta_min, args.beta_max, args.beta_steps, args.trials, args.error_at
    ));
    if let Some(note) = &src.dataset_note {
        out.push_str(note);
    }
    out.push_str("beta,median_error,p25_error,p75_error\n");
    for (beta, stats) in sweep.axis.iter().zip(&sweep.stats) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g(*beta),
            fmt_g(stats.median),
            fmt_g(stats.p25),
            fmt_g(stats.p75)
        ));
    }
    out.push_str(&format!(
        "# argmin beta = {} median_error = {}\n",
        fmt_g(sweep.argmin_axis_value()),
        fmt_g(sweep.argmin_stats().median)
    ));
    write_output(&out, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_sweep_eps(args: SweepEpsArgs) -> Result<i32, CliError> {
    let betas = parse_f64_list(&args.betas, "beta")?;
    let eps_grid = linspace(args.eps_min, args.eps_max, args.eps_steps, "epsilon")?;
    let sweeps = sweep_epsilon(&eps_grid, &betas, args.n, args.iters, args.trials, args.seed)?;

    let mut out = version_line();
    out.push_str(&format!(
        "# replay: sweep-eps --n {} --seed {} --eps-min {} --eps-max {} --eps-steps {} --betas {} --trials {} --iters {}\n",
        args.n,
        args.seed,
        args.eps_min,
        args.eps_max,
        args.eps_steps,
        quote(&args.betas),
        args.trials,
        args.iters
    ));
    out.push_str("epsilon,beta,mean_log10_error\n");
    for (e, eps) in eps_grid.iter().enumerate() {
        for sweep in &sweeps {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_g(*eps),
                fmt_g(sweep.beta),
                fmt_g(sweep.result.stats[e].mean)
            ));
        }
    }
    write_output(&out, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_sweep_n(args: SweepNArgs) -> Result<i32, CliError> {
    let choice = args.source.unwrap_or(SourceChoice::Uniform);
    let (kind, source_replay) = match choice {
        SourceChoice::Uniform => {
            let lo = args.lo.unwrap_or(0.0);
            let hi = args.hi.unwrap_or(1.0);
            (
                SourceKind::Uniform { lo, hi },
                format!("--source uniform --lo {lo} --hi {hi}"),
            )
        }
        SourceChoice::Gaussian => {
            if args.lo.is_some() || args.hi.is_some() {
                return Err(CliError::Usage(
                    "--lo/--hi only apply to --source uniform".to_string(),
                ));
            }
            (SourceKind::Gaussian, "--source gaussian".to_string())
        }
        SourceChoice::Sphere => {
            if args.lo.is_some() || args.hi.is_some() {
                return Err(CliError::Usage(
                    "--lo/--hi only apply to --source uniform".to_string(),
                ));
            }
            (SourceKind::UnitSphere, "--source sphere".to_string())
        }
        SourceChoice::Csv => {
            return Err(CliError::Usage(
                "sweep-n varies the signal dimension, which a CSV source fixes; use a synthetic source".to_string(),
            ));
        }
    };
    let dims = parse_usize_list(&args.n_set, "dimension")?;
    let betas = linspace(args.beta_min, args.beta_max, args.beta_steps, "beta")?;
    let sweeps = sweep_length(&dims, &betas, kind, args.iters, args.trials, args.seed)?;

    let mut out = version_line();
    out.push_str(&format!(
        "# replay: sweep-n {source_replay} --seed {} --n-set {} --beta-min {} --beta-max {} --beta-steps {} --trials {} --iters {}\n",
        args.seed,
        quote(&args.n_set),
        args.beta_min,
        args.beta_max,
        args.beta_steps,
        args.trials,
        args.iters
    ));
    out.push_str("n,beta,mean_log10_error\n");
    for sweep in &sweeps {
        for (beta, stats) in sweep.result.axis.iter().zip(&sweep.result.stats) {
            out.push_str(&format!(
                "{},{},{}\n",
                sweep.dim,
                fmt_g(*beta),
                fmt_g(stats.mean)
            ));
        }
    }
    for sweep in &sweeps {
        out.push_str(&format!(
            "# argmin n = {} beta = {} mean_log10_error = {}\n",
            sweep.dim,
            fmt_g(sweep.result.argmin_axis_value()),
            fmt_g(sweep.result.argmin_stats().mean)
        ));
    }
    write_output(&out, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_theory(args: TheoryArgs) -> Result<i32, CliError> {
    let (w, replay_head, dataset_note) = match (args.closed_form, args.mc_samples) {
        (true, Some(_)) => {
            return Err(CliError::Usage(
                "choose one of --closed-form or --mc-samples".to_string(),
            ));
        }
        (false, None) => {
            return Err(CliError::Usage(
                "theory needs --closed-form or --mc-samples <N>".to_string(),
            ));
        }
        (true, None) => {
            let choice = args.source.source.unwrap_or(SourceChoice::Sphere);
            if !matches!(choice, SourceChoice::Sphere | SourceChoice::Gaussian) {
                return Err(CliError::Usage(
                    "--closed-form assumes isotropic directions (sphere or gaussian)".to_string(),
                ));
            }
            forbid_csv_flags(&args.source, "closed-form")?;
            forbid_range_flags(&args.source, "closed-form")?;
            let dim = args.source.n.unwrap_or(50);
            if dim == 0 {
                return Err(CliError::Usage("--n must be at least 1".to_string()));
            }
            let w = crate::theory::closed_form_w_isotropic(dim);
            (w, format!("theory --closed-form --n {dim}"), None)
        }
        (false, Some(samples)) => {
            let src = resolve_source(&args.source)?;
            let spec = SourceSpec::new(src.kind.clone(), src.dim, src.seed)?;
            let mut rng = make_rng(spec.seed());
            let mut source = MeasurementSource::new(&spec);
            let w = estimate_w(&mut source, &mut rng, samples)?;
            (
                w,
                format!("theory --mc-samples {samples} {}", src.replay),
                src.dataset_note,
            )
        }
    };

    let mut out = version_line();
    match args.beta {
        Some(beta) => out.push_str(&format!("# replay: {replay_head} --beta {beta}\n")),
        None => out.push_str(&format!("# replay: {replay_head}\n")),
    }
    if let Some(note) = dataset_note {
        out.push_str(&note);
    }
    match w.samples() {
        WSamples::ClosedForm => out.push_str("w_source = closed-form\n"),
        WSamples::MonteCarlo(n) => {
            out.push_str("w_source = monte-carlo\n");
            out.push_str(&format!("samples = {n}\n"));
        }
    }
    out.push_str(&format!("dim = {}\n", w.matrix().order()));
    out.push_str(&format!("trace = {}\n", fmt_g(w.matrix().trace())));
    out.push_str(&format!("sigma_min = {}\n", fmt_g(w.sigma_min())));
    out.push_str(&format!("sigma_max = {}\n", fmt_g(w.sigma_max())));
    let beta_max = max_beta_for_spectrum(w.sigma_min(), w.sigma_max())?;
    out.push_str(&format!("beta_max = {}\n", fmt_g(beta_max)));

    let mut code = EXIT_OK;
    if let Some(beta) = args.beta {
        let report = rate_constants(beta, w.sigma_min(), w.sigma_max())?;
        out.push_str(&format!("beta = {}\n", fmt_g(report.beta)));
        out.push_str(&format!("condition_value = {}\n", fmt_g(report.condition_value)));
        out.push_str(&format!("admissible = {}\n", report.admissible));
        out.push_str(&format!("a1 = {}\n", fmt_g(report.a1)));
        out.push_str(&format!("a2 = {}\n", fmt_g(report.a2)));
        out.push_str(&format!("q = {}\n", fmt_g(report.q)));
        out.push_str(&format!("delta = {}\n", fmt_g(report.delta)));
        if !report.admissible {
            code = EXIT_NOT_ADMISSIBLE;
        }
    }
    write_output(&out, args.out.as_deref())?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let grid = linspace(0.0, 0.6, 25, "beta").unwrap();
        assert_eq!(grid.len(), 25);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[24], 0.6);
        assert!((grid[1] - 0.025).abs() < 1e-15);
        assert_eq!(linspace(0.3, 0.9, 1, "beta").unwrap(), vec![0.3]);
        assert!(linspace(1.0, 0.0, 5, "beta").is_err());
        assert!(linspace(0.0, 1.0, 0, "beta").is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_f64_list("0.0, 0.5", "beta").unwrap(), vec![0.0, 0.5]);
        assert!(parse_f64_list("0.0,,0.5", "beta").is_err());
        assert!(parse_f64_list("abc", "beta").is_err());
        assert_eq!(parse_usize_list("50,100", "dim").unwrap(), vec![50, 100]);
        assert!(parse_usize_list("-3", "dim").is_err());
    }

    #[test]
    fn seventeen_digit_values_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -5e-324, 0.0, 123456.789] {
            let printed = fmt_g(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{printed}");
        }
    }

    #[test]
    fn quoting_only_when_needed() {
        assert_eq!(quote("plain.csv"), "plain.csv");
        assert_eq!(quote("with space.csv"), "\"with space.csv\"");
        assert_eq!(quote(""), "\"\"");
    }

    #[test]
    fn source_resolution_defaults_to_uniform() {
        let args = SourceArgs {
            source: None,
            n: None,
            lo: None,
            hi: None,
            csv_path: None,
            row_mode: None,
            delimiter: None,
            skip_header: false,
            missing_token: None,
            columns: None,
            seed: 1,
        };
        let resolved = resolve_source(&args).unwrap();
        assert_eq!(resolved.dim, 50);
        assert!(matches!(resolved.kind, SourceKind::Uniform { lo, hi } if lo == 0.0 && hi == 1.0));
        assert_eq!(
            resolved.replay,
            "--source uniform --n 50 --lo 0 --hi 1 --seed 1"
        );
    }

    #[test]
    fn csv_flags_are_rejected_for_synthetic_sources() {
        let args = SourceArgs {
            source: Some(SourceChoice::Gaussian),
            n: Some(10),
            lo: None,
            hi: None,
            csv_path: Some(PathBuf::from("x.csv")),
            row_mode: None,
            delimiter: None,
            skip_header: false,
            missing_token: None,
            columns: None,
            seed: 1,
        };
        assert!(matches!(resolve_source(&args), Err(CliError::Usage(_))));
    }
}
