use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahrs_core::eval::{format_comparison, format_report, RunResult};
use ahrs_core::io;
use ahrs_core::sim::simulate;
use ahrs_core::{run_pipeline, Algorithm, PipelineConfig};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

/// FastEuler double-layer Kalman filter AHRS: simulate, fuse, evaluate.
#[derive(Parser)]
#[command(name = "ahrs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sensor log (with truth columns) from a scenario file.
    Sim {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// Output log CSV.
        #[arg(short, long)]
        output: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a fusion algorithm over a sensor log and write attitude estimates.
    Run {
        /// Input sensor log CSV.
        log: PathBuf,
        /// Output estimates CSV.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        setup: Setup,
    },
    /// RMSE of an estimate file against the truth columns of a log.
    Eval {
        estimates: PathBuf,
        log: PathBuf,
        /// Name shown in the report; defaults to the estimate file's stem.
        #[arg(long)]
        label: Option<String>,
        #[command(flatten)]
        setup: Setup,
    },
    /// Side-by-side RMSE of two estimate files and the candidate's improvement.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
        log: PathBuf,
    },
    /// Print the default configuration in config-file format.
    Config,
}

/// How a run is configured; also used to label reports with a config hash.
#[derive(clap::Args)]
struct Setup {
    /// Key-value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Algorithm override: dlkf, cf or gyro-only.
    #[arg(short, long)]
    algorithm: Option<Algorithm>,
}

impl Setup {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => io::read_config_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn evaluate(estimates: &Path, log: &Path, label: String, config_hash: u64) -> Result<RunResult> {
    let est = io::read_estimates_file(estimates)?;
    let records = io::read_log_file(log)?;
    let truth = io::truth_stamped(&records, &log.display().to_string())?;
    Ok(RunResult::from_stamped(
        label,
        config_hash,
        &io::estimates_stamped(&est),
        &truth,
    )?)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sim {
            scenario,
            output,
            seed,
        } => {
            let sc = io::read_scenario_file(&scenario)?;
            let seed = seed.unwrap_or(sc.seed);
            let records = simulate(
                &sc.trajectory,
                &sc.gyro,
                &sc.accel,
                &sc.mag,
                sc.rate_hz,
                seed,
            )?;
            io::write_log(create(&output)?, &records)?;
            println!("wrote {} records to {}", records.len(), output.display());
        }
        Command::Run { log, output, setup } => {
            let cfg = setup.resolve()?;
            let records = io::read_log_file(&log)?;
            let estimates = run_pipeline(&records, &cfg)?;
            io::write_estimates(create(&output)?, &estimates)?;
            println!(
                "wrote {} estimates to {} (algorithm={} config_hash={:016x})",
                estimates.len(),
                output.display(),
                cfg.algorithm,
                io::config_hash(&cfg)
            );
        }
        Command::Eval {
            estimates,
            log,
            label,
            setup,
        } => {
            let cfg = setup.resolve()?;
            let label = label.unwrap_or_else(|| stem(&estimates));
            let run = evaluate(&estimates, &log, label, io::config_hash(&cfg))?;
            print!("{}", format_report(&run));
        }
        Command::Compare {
            baseline,
            candidate,
            log,
        } => {
            let base = evaluate(&baseline, &log, stem(&baseline), 0)?;
            let cand = evaluate(&candidate, &log, stem(&candidate), 0)?;
            print!("{}", format_comparison(&base, &cand)?);
        }
        Command::Config => print!("{}", io::format_config(&PipelineConfig::default())),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
