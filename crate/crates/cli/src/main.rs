//! `cvqkd-calib`: key-rate, tolerable-noise and calibration sweeps driven
//! by a TOML configuration.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd_core::sweep::{run_calibration_report, run_sweep, run_ten_sweep, write_rows, CsvRecord};
use cvqkd_core::SweepConfig;

#[derive(Parser)]
#[command(
    name = "cvqkd-calib",
    version,
    about = "Calibration-aware CV-QKD key-rate sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate over the (model, V, distance, delta) grid.
    Sweep(RunArgs),
    /// Tolerable excess noise over the same grid.
    Ten(RunArgs),
    /// Normalised SNU and deviation of both calibration procedures.
    Calib(RunArgs),
    /// Parse and validate a configuration without running it.
    ValidateConfig(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration value, e.g. `--set system.eps_c=0.02`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file (overrides `output.path`; `-` for standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads.
    #[arg(long, env = "CVQKD_CALIB_JOBS")]
    jobs: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Runtime(m) => m,
        }
    }
}

fn load(args: &ConfigArgs) -> Result<SweepConfig, Failure> {
    config::load(&args.config, &args.overrides).map_err(Failure::Config)
}

fn resolve(args: &RunArgs) -> Result<(SweepConfig, usize), Failure> {
    let mut cfg = load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output.path = (out.as_os_str() != "-").then(|| out.clone());
    }
    if let Some(format) = &args.format {
        cfg.output.format = format
            .parse()
            .map_err(|e: cvqkd_core::Error| Failure::Config(e.to_string()))?;
    }
    let jobs = match args.jobs {
        Some(0) => return Err(Failure::Config("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok((cfg, jobs))
}

fn emit<R: CsvRecord>(rows: &[R], cfg: &SweepConfig) -> Result<(), Failure> {
    let io_err = |e: io::Error| {
        let target = cfg
            .output
            .path
            .as_ref()
            .map_or("standard output".to_string(), |p| p.display().to_string());
        Failure::Runtime(format!("cannot write {target}: {e}"))
    };
    match &cfg.output.path {
        Some(path) => {
            let file = File::create(path).map_err(io_err)?;
            write_rows(rows, cfg.output.format, BufWriter::new(file)).map_err(io_err)
        }
        None => write_rows(rows, cfg.output.format, io::stdout().lock()).map_err(io_err),
    }
}

fn validate(cfg: &SweepConfig) -> Result<Vec<&'static str>, Failure> {
    let wants_sweep = !cfg.models.is_empty() || cfg.distances_km.is_some();
    let mut checked = Vec::new();
    if wants_sweep {
        cfg.validate_sweep()
            .map_err(|e| Failure::Config(e.to_string()))?;
        checked.push("sweep");
    }
    if cfg.calibration.is_some() {
        cfg.validate_calibration()
            .map_err(|e| Failure::Config(e.to_string()))?;
        checked.push("calibration");
    }
    if checked.is_empty() {
        return Err(Failure::Config(
            "configuration defines neither a sweep grid nor a calibration section".into(),
        ));
    }
    Ok(checked)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let runtime = |e: cvqkd_core::Error| Failure::Runtime(e.to_string());
    let configuration = |e: cvqkd_core::Error| Failure::Config(e.to_string());
    match cli.command {
        Command::Sweep(args) => {
            let (cfg, jobs) = resolve(&args)?;
            cfg.validate_sweep().map_err(configuration)?;
            emit(&run_sweep(&cfg, jobs).map_err(runtime)?, &cfg)
        }
        Command::Ten(args) => {
            let (cfg, jobs) = resolve(&args)?;
            cfg.validate_sweep().map_err(configuration)?;
            emit(&run_ten_sweep(&cfg, jobs).map_err(runtime)?, &cfg)
        }
        Command::Calib(args) => {
            let (cfg, _) = resolve(&args)?;
            cfg.validate_calibration().map_err(configuration)?;
            emit(&run_calibration_report(&cfg).map_err(runtime)?, &cfg)
        }
        Command::ValidateConfig(args) => {
            let cfg = load(&args)?;
            let checked = validate(&cfg)?;
            writeln!(
                io::stdout(),
                "{}: ok ({})",
                args.config.display(),
                checked.join(", ")
            )
            .map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are configuration errors (exit 1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
