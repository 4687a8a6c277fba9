use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chanest::config::ExperimentConfig;
use chanest::experiments::{self, generate, RunOptions};
use chanest::report::Table;
use chanest::selftest::{self, SelftestOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chanest", version, about = "Score-based MIMO channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `dataset.dir`.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw and write the train, validation and test splits.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Also write each split as CSV next to the binary file.
        #[arg(long)]
        export_csv: bool,
    },
    /// NMSE sweep over the configured estimators.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Record wall-clock milliseconds per row.
        #[arg(long)]
        timing: bool,
    },
    /// Mismatch report with quadrature and Monte Carlo cross-checks.
    Theory(Common),
    /// Posterior sampling NMSE across mismatched SISO profiles.
    Mnr(Common),
    /// DSM loss of the exact training-set score per noise level.
    Dsm(Common),
    /// Uncoded BER through the precoded link.
    E2e(Common),
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
        /// Flip the likelihood residual sign (mutation test).
        #[arg(long, hide = true)]
        mutate_likelihood_sign: bool,
    },
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(dir) = &self.data_dir {
            cfg.dataset.dir = dir.clone();
        }
        if self.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build_global()
                .context("configuring the worker pool")?;
        }
        Ok(cfg)
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn emit(table: &Table, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => table.write(path)?,
        None => std::io::stdout().write_all(table.to_csv()?.as_bytes())?,
    }
    Ok(())
}

fn with_config(common: &Common, run: impl FnOnce(&ExperimentConfig) -> chanest::Result<Table>) -> Result<()> {
    let cfg = common.load()?;
    common.note(&format!("scenario {}", cfg.scenario));
    let table = run(&cfg)?;
    common.note(&format!("{} rows", table.len()));
    emit(&table, common.out.as_ref().or(cfg.output.as_ref()))
}

fn load_splits(cfg: &ExperimentConfig) -> chanest::Result<experiments::Splits> {
    generate::read_splits(&cfg.dataset.dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { common, export_csv } => with_config(common, |cfg| {
            let table = generate::run(cfg)?;
            if *export_csv {
                generate::export_splits_csv(&cfg.dataset.dir)?;
            }
            Ok(table)
        }),
        Command::Estimate { common, timing } => with_config(common, |cfg| {
            experiments::estimate::run(cfg, &load_splits(cfg)?, RunOptions { timing: *timing })
        }),
        Command::Theory(c) => with_config(c, experiments::theory::run),
        Command::Mnr(c) => with_config(c, experiments::mnr::run),
        Command::Dsm(c) => with_config(c, |cfg| experiments::dsm::run(cfg, &load_splits(cfg)?)),
        Command::E2e(c) => with_config(c, |cfg| experiments::e2e::run(cfg, &load_splits(cfg)?)),
        Command::Selftest { out, quiet, mutate_likelihood_sign } => {
            let checks = selftest::run(SelftestOptions { flip_likelihood_sign: *mutate_likelihood_sign });
            if !quiet {
                for c in &checks {
                    eprintln!("{:<28} {} ({:.2} s) {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.seconds, c.detail);
                }
            }
            let failed = checks.iter().any(|c| !c.passed);
            match emit(&selftest::table(&checks), out.as_ref()) {
                Ok(()) if failed => return ExitCode::FAILURE,
                other => other,
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
