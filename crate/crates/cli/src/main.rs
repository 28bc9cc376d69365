//! `lppl`: LPPL bubble indicators from daily price CSVs.
//!
//! Exit codes: 0 success, 2 I/O error, 3 configuration or validation error.

mod config;
mod error;
mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use lppl_bubble::artifacts;
use lppl_bubble::calibration::{self, FitTable};
use lppl_bubble::indicator::indicator_series;
use lppl_bubble::synth::{generate, SynthSpec};
use lppl_bubble::timeseries::{load_csv, resample_daily, to_log, weekly_moving_average, CsvSchema};
use lppl_bubble::{FilterConfig, LogSeries, LpplParams, PipelineConfig};

use crate::config::{Emit, FileConfig, RunManifest};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "lppl", version, about = "Log-periodic power law bubble indicators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic LPPL price series as CSV.
    Synth(SynthArgs),
    /// Calibrate shrinking windows and write the fit table.
    Fit(RunArgs),
    /// Write bubble indicators, fitting first unless --fits is given.
    Indicate(IndicateArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    c2: f64,
    #[arg(long)]
    m: f64,
    #[arg(long)]
    omega: f64,
    /// Critical time as a day offset from the first row.
    #[arg(long)]
    tc: f64,
    #[arg(long)]
    days: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of Gaussian noise on the log-price.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "2021-01-01")]
    start: NaiveDate,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Price CSV; repeat for several assets.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Asset label per input, in order; defaults to the file stem.
    #[arg(long)]
    label: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// TOML file with [pipeline] and [filter] tables and top-level options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window_init: Option<usize>,
    #[arg(long)]
    window_step: Option<usize>,
    #[arg(long)]
    window_min: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    filter_min_osc: Option<f64>,
    #[arg(long)]
    filter_min_damp: Option<f64>,
    /// Apply a trailing 7-day moving average before fitting.
    #[arg(long)]
    smooth_weekly: bool,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<Emit>>,
    #[arg(long)]
    date_col: Option<String>,
    #[arg(long)]
    price_col: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct IndicateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Previously written `<label>.fits.json` to use instead of fitting.
    /// Only valid with a single input.
    #[arg(long)]
    fits: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Fit(args) => manifest(&args).and_then(|m| cmd_fit(&m)),
        Command::Indicate(args) => manifest(&args.run).and_then(|m| cmd_indicate(&m, args.fits.as_deref())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn manifest(args: &RunArgs) -> Result<RunManifest, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut pipeline = file.pipeline.unwrap_or_default();
    let mut filter = file.filter.unwrap_or_default();
    let set = |slot: &mut usize, flag: Option<usize>| {
        if let Some(v) = flag {
            *slot = v;
        }
    };
    set(&mut pipeline.initial_window_days, args.window_init);
    set(&mut pipeline.shrink_step_days, args.window_step);
    set(&mut pipeline.min_window_days, args.window_min);
    set(&mut pipeline.starts_per_window, args.starts);
    set(&mut pipeline.max_optimizer_iters, args.max_iters);
    if let Some(seed) = args.seed {
        pipeline.rng_seed = seed;
    }
    if let Some(v) = args.filter_min_osc {
        filter.min_oscillations = v;
    }
    if let Some(v) = args.filter_min_damp {
        filter.min_damping = v;
    }

    if !args.label.is_empty() && args.label.len() != args.input.len() {
        return Err(CliError::Config(format!(
            "{} labels given for {} inputs",
            args.label.len(),
            args.input.len()
        )));
    }
    let inputs = args
        .input
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let label = args.label.get(i).cloned().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("asset{i}"))
            });
            (path.clone(), label)
        })
        .collect();

    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }

    let manifest = RunManifest {
        inputs,
        out_dir: args.out.clone(),
        pipeline,
        filter,
        emit: args
            .emit
            .clone()
            .or(file.emit)
            .unwrap_or_else(|| vec![Emit::Csv, Emit::Json, Emit::Svg]),
        smooth_weekly: args.smooth_weekly || file.smooth_weekly.unwrap_or(false),
        date_column: args.date_col.clone().or(file.date_column).unwrap_or_else(|| "date".into()),
        price_column: args.price_col.clone().or(file.price_column).unwrap_or_else(|| "price".into()),
    };
    manifest.validate()?;
    Ok(manifest)
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let params = LpplParams {
        a: args.a,
        b: args.b,
        c1: args.c1,
        c2: args.c2,
        tc: args.tc,
        m: args.m,
        omega: args.omega,
    };
    let spec = SynthSpec {
        params,
        n_days: args.days,
        noise_sigma: args.noise,
        seed: args.seed,
        start_date: args.start,
    };
    let series = generate(&spec)?;
    match &args.out {
        Some(path) => {
            let file = create(path)?;
            series.write_csv(file)?;
        }
        None => series.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn load_series(path: &Path, manifest: &RunManifest) -> Result<LogSeries, CliError> {
    let schema = CsvSchema {
        date_column: manifest.date_column.clone(),
        price_column: manifest.price_column.clone(),
    };
    let daily = resample_daily(&load_csv(path, &schema)?);
    let prices = if manifest.smooth_weekly {
        weekly_moving_average(&daily)?
    } else {
        daily
    };
    Ok(to_log(&prices))
}

fn fit_series(series: &LogSeries, config: &PipelineConfig) -> Result<FitTable, CliError> {
    Ok(calibration::run_all(series, config)?)
}

fn summarize(label: &str, table: &FitTable, config: &PipelineConfig) {
    let windows: usize = table
        .anchors
        .iter()
        .map(|a| calibration::enumerate_windows(a.t2, config).len())
        .sum();
    let accepted = table.accepted_fits();
    let rate = if windows == 0 { 0.0 } else { 100.0 * accepted as f64 / windows as f64 };
    println!(
        "{label}: {} anchors processed, {accepted}/{windows} windows accepted ({rate:.1}%)",
        table.anchors.len()
    );
}

fn cmd_fit(manifest: &RunManifest) -> Result<(), CliError> {
    ensure_dir(&manifest.out_dir)?;
    for (path, label) in &manifest.inputs {
        let series = load_series(path, manifest)?;
        let table = fit_series(&series, &manifest.pipeline)?;
        summarize(label, &table, &manifest.pipeline);
        write_fits(manifest, label, &table)?;
    }
    Ok(())
}

fn cmd_indicate(manifest: &RunManifest, fits: Option<&Path>) -> Result<(), CliError> {
    if fits.is_some() && manifest.inputs.len() != 1 {
        return Err(CliError::Config("--fits works with exactly one --input".into()));
    }
    ensure_dir(&manifest.out_dir)?;
    for (path, label) in &manifest.inputs {
        let series = load_series(path, manifest)?;
        let table = match fits {
            Some(fits_path) => {
                let rows = artifacts::read_fits_json(open(fits_path)?)?;
                artifacts::fit_table_from_rows(&rows, &series, &manifest.pipeline)?
            }
            None => {
                let table = fit_series(&series, &manifest.pipeline)?;
                write_fits(manifest, label, &table)?;
                table
            }
        };
        summarize(label, &table, &manifest.pipeline);
        write_indicators(manifest, label, &series, &table, &manifest.filter)?;
    }
    Ok(())
}

fn write_fits(manifest: &RunManifest, label: &str, table: &FitTable) -> Result<(), CliError> {
    if manifest.emits(Emit::Csv) {
        artifacts::write_fits_csv(table, create(&manifest.out_dir.join(format!("{label}.fits.csv")))?)?;
    }
    if manifest.emits(Emit::Json) {
        artifacts::write_fits_json(table, create(&manifest.out_dir.join(format!("{label}.fits.json")))?)?;
    }
    Ok(())
}

fn write_indicators(
    manifest: &RunManifest,
    label: &str,
    series: &LogSeries,
    table: &FitTable,
    filter: &FilterConfig,
) -> Result<(), CliError> {
    let points = indicator_series(table, filter);
    let out = &manifest.out_dir;
    if manifest.emits(Emit::Csv) {
        artifacts::write_indicators_csv(&points, create(&out.join(format!("{label}.indicators.csv")))?)?;
    }
    if manifest.emits(Emit::Json) {
        artifacts::write_indicators_json(&points, create(&out.join(format!("{label}.indicators.json")))?)?;
    }
    if manifest.emits(Emit::Svg) {
        let path = out.join(format!("{label}.svg"));
        let mut file = create(&path)?;
        file.write_all(svg::render(label, series, &points).as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}
