use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fprinciple::experiment::{
    self, sweep, validate_assumptions, write_sweep_csv, ExperimentConfig, RunOutput, SweepAxis, PRESETS,
};
use fprinciple::Error;

const DEFAULT_OUT: &str = "fprinciple-out";

/// Frequency-principle measurements on small fully connected networks.
#[derive(Debug, Parser)]
#[command(name = "fprinciple", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train, diagnose and write the artifact bundle.
    Run(Source),
    /// One run per value of an axis, merged into sweep.csv.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// eta, m, width or p
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Check a config and report the status of each modeling assumption.
    Validate(Source),
    /// List the shipped presets, or print one.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
    /// Recompute diagnostics from a stored trajectory.
    Replay {
        /// Trajectory file, or a run directory containing one.
        trajectory: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
        #[arg(long = "grid-m")]
        grid_m: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated cutoffs replacing the default sweep.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long = "grid-m")]
    grid_m: Option<usize>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
            }
            (None, Some(name)) => experiment::preset(name)?,
            (None, None) => unreachable!("clap requires a source"),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        apply_overrides(&mut config, self.eta.clone(), self.grid_m)?;
        Ok(config)
    }
}

fn apply_overrides(config: &mut ExperimentConfig, eta: Option<Vec<f64>>, grid_m: Option<usize>) -> Result<()> {
    if let Some(eta) = eta {
        config.eta.values = Some(eta);
    }
    if let Some(m) = grid_m {
        config.grid.m = m;
    }
    config.validate()?;
    Ok(())
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn report(out: &RunOutput, dir: &Path) {
    let s = &out.summary;
    println!(
        "{}  {}  {} steps  loss {:.4e} -> {:.4e}",
        s.network, s.loss, s.steps, s.train_loss_initial, s.train_loss_final
    );
    for c in &s.checks {
        println!("  {:<22} {:<8} {}", c.name, c.status.to_string(), c.detail);
    }
    println!("artifacts in {}", dir.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(source) => {
            let config = source.load()?;
            let out = experiment::execute(&config)?;
            let dir = out_dir(&config);
            experiment::write_artifacts(&out, &dir)?;
            report(&out, &dir);
        }
        Command::Sweep { source, axis, values } => {
            let config = source.load()?;
            let dir = out_dir(&config);
            fs::create_dir_all(&dir)?;
            let rows = sweep(&config, axis, &values, Some(&dir))?;
            let path = dir.join("sweep.csv");
            write_sweep_csv(&rows, BufWriter::new(fs::File::create(&path)?))?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} rows ({failed} failed) in {}", rows.len(), path.display());
        }
        Command::Validate(source) => {
            let config = source.load()?;
            let r = validate_assumptions(&config);
            println!("config ok; k = {}", r.smoothness);
            for item in &r.items {
                println!("  {:<18} {:<8} {}", item.name, item.status.to_string(), item.detail);
            }
        }
        Command::Presets { show } => match show {
            Some(name) => {
                let p = PRESETS
                    .iter()
                    .find(|p| p.name == name)
                    .ok_or_else(|| experiment::preset(&name).unwrap_err())?;
                print!("{}", p.source);
            }
            None => {
                for p in PRESETS {
                    println!("{:<18} {}", p.name, p.description);
                }
            }
        },
        Command::Replay {
            trajectory,
            out,
            eta,
            grid_m,
        } => {
            let file = if trajectory.is_dir() {
                trajectory.join(experiment::TRAJECTORY_FILE)
            } else {
                trajectory.clone()
            };
            let (mut config, record) = experiment::load_trajectory(&file)?;
            apply_overrides(&mut config, eta, grid_m)?;
            let result = experiment::analyze(&config, record)?;
            let dir = out.unwrap_or_else(|| file.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
            experiment::write_diagnostics(&result, &dir)?;
            report(&result, &dir);
        }
    }
    Ok(())
}

/// 1 for invalid input, 2 for divergence, 3 for I/O and file format.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Divergence { .. } | Error::TrajectoryBound { .. } => 2,
                Error::Io(_) | Error::Format(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fprinciple::experiment::CheckStatus;

    #[test]
    fn exit_codes_follow_the_error_class() {
        let div = anyhow::Error::new(Error::Divergence {
            step: 3,
            quantity: "loss",
            value: f64::INFINITY,
        });
        assert_eq!(exit_code(&div), 2);
        let io = anyhow::Error::new(std::io::Error::other("x")).context("reading");
        assert_eq!(exit_code(&io), 3);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Format("bad".into()))), 3);
        assert_eq!(exit_code(&anyhow::Error::new(Error::EmptyData)), 1);
    }

    #[test]
    fn check_status_is_printed_plainly() {
        assert_eq!(CheckStatus::Fail.to_string(), "FAIL");
    }
}
