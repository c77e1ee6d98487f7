//! `nhgp`: generate data, train, evaluate and reproduce the rolling-disk benchmark.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nhgp::config::RunConfig;
use nhgp::evaluate::format_table;
use nhgp::{io, pipeline};

#[derive(Parser)]
#[command(
    name = "nhgp",
    version,
    about = "Constraint-preserving GP regression for nonholonomic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the training dataset from the true dynamics.
    Generate(Common),
    /// Optimize hyperparameters and fit every configured model.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; defaults to <out>/dataset.csv.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compute metrics and figure data for trained models.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory holding model_<label>.json files; defaults to <out>.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Run every step, including the consistency sweep.
    Reproduce(Common),
    /// Print the effective configuration as JSON.
    ShowConfig(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON; defaults to the built-in benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::benchmark(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        log::info!(
            "config {} seed {} out {}",
            self.config
                .as_deref()
                .map_or("<benchmark>".into(), |p| p.display().to_string()),
            cfg.seed,
            cfg.output_dir.display()
        );
        Ok(cfg)
    }
}

/// Failure while training some models; the others were still written.
#[derive(Debug)]
struct PartialFailure {
    numerical: bool,
    labels: Vec<String>,
}

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training failed for: {}", self.labels.join(", "))
    }
}

impl std::error::Error for PartialFailure {}

fn check_failures(failures: &[(String, nhgp::Error)]) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    Err(PartialFailure {
        numerical: failures.iter().any(|(_, e)| e.is_numerical()),
        labels: failures.iter().map(|(l, _)| l.clone()).collect(),
    }
    .into())
}

fn log_files(files: &[PathBuf]) {
    for f in files {
        log::info!("wrote {}", f.display());
    }
}

fn print_table(reports: &[nhgp::evaluate::MetricsReport]) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(format_table(reports).as_bytes());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = c.load()?;
            let data = pipeline::generate(&cfg)?;
            log::info!(
                "generated {} samples, config hash {}",
                data.len(),
                data.meta.config_hash
            );
            log_files(&pipeline::write_generated(&cfg, &data, &cfg.output_dir)?);
        }
        Command::Train { common, data } => {
            let cfg = common.load()?;
            let path = data.unwrap_or_else(|| cfg.output_dir.join(pipeline::DATASET_FILE));
            let data = io::read_dataset(&path).with_context(|| "run `nhgp generate` first or pass --data")?;
            let hash = pipeline::config_hash(&cfg);
            if data.meta.config_hash != hash {
                log::warn!("dataset {} was generated from a different config", path.display());
            }
            let trained = pipeline::train(&cfg, &data)?;
            log_files(&pipeline::write_models(&trained.models, &cfg.output_dir)?);
            check_failures(&trained.failures)?;
        }
        Command::Evaluate { common, models } => {
            let cfg = common.load()?;
            let dir = models.unwrap_or_else(|| cfg.output_dir.clone());
            let models = pipeline::load_models(&cfg, &dir)?;
            let eval = pipeline::evaluate(&cfg, &models)?;
            log_files(&pipeline::write_evaluation(&cfg, &eval, &[], &cfg.output_dir)?);
            print_table(&eval.reports());
        }
        Command::Reproduce(c) => {
            let cfg = c.load()?;
            let r = pipeline::reproduce(&cfg, &cfg.output_dir)?;
            log_files(&r.files);
            print_table(&r.evaluation.reports());
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "\nConsistency sweep (sup field error on the test grid)");
            for row in &r.sweep {
                let _ = writeln!(
                    out,
                    "  N = {:>4}  seed {:>3}  {:.6e}",
                    row.n_train, row.seed, row.sup_error
                );
            }
            check_failures(&r.trained.failures)?;
        }
        Command::ShowConfig(c) => {
            let cfg = c.load()?;
            println!("{}", cfg.to_json());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(p) = err.downcast_ref::<PartialFailure>() {
        return if p.numerical { 2 } else { 1 };
    }
    match err.downcast_ref::<nhgp::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} msg=\"{}\"",
                record.level(),
                record.target(),
                record.args().to_string().replace('"', "'")
            )
        })
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn numerical_errors_map_to_two() {
        let e: anyhow::Error = nhgp::Error::IllConditioned { jitter: 1e-6 }.into();
        assert_eq!(exit_code(&e), 2);
        let e: anyhow::Error = nhgp::Error::Config("bad".into()).into();
        assert_eq!(exit_code(&e), 1);
        let e: anyhow::Error = PartialFailure {
            numerical: true,
            labels: vec!["a".into()],
        }
        .into();
        assert_eq!(exit_code(&e), 2);
        let e = anyhow::Error::from(nhgp::Error::Divergence { last_valid_time: 1.0 }).context("rollout");
        assert_eq!(exit_code(&e), 2);
    }
}
