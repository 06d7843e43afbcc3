//! `prl`: train, evaluate and compare preorder-guided learners from a JSON
//! run config, run the selection filter on standalone quantile files, and
//! summarize run scores.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use preorder_rl::{ComparatorKind, PreorderSpec};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "prl", version, about = "Preorder-guided distributional RL experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated seeds; overrides the config.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Worker threads for independent (cell, seed) jobs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComparatorArg {
    Qd,
    Cvar,
    Mv,
}

impl From<ComparatorArg> for ComparatorKind {
    fn from(c: ComparatorArg) -> Self {
        match c {
            ComparatorArg::Qd => Self::QuantileDominance,
            ComparatorArg::Cvar => Self::CVaR,
            ComparatorArg::Mv => Self::MeanVariance,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every grid cell for every seed.
    Train(RunArgs),
    /// Evaluate trained cells; writes metrics.csv, summary.csv and scores.csv.
    Evaluate(RunArgs),
    /// Evaluate and write the ablation and per-objective reward tables.
    Compare(RunArgs),
    /// Run the selection filter on per-objective quantile CSV files.
    Select {
        /// Preorder JSON: {"n_objectives": N, "edges": [[h, l], ...]}.
        #[arg(long)]
        preorder: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "qd")]
        comparator: ComparatorArg,
        #[arg(long, default_value_t = 0.25)]
        cvar_alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        mv_lambda: f64,
        /// Survivor CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the pairwise relation matrices to stderr.
        #[arg(long)]
        debug: bool,
        /// One `tau,a0,a1,...` file per objective, in objective order.
        #[arg(required = true)]
        quantiles: Vec<PathBuf>,
    },
    /// IQM, optimality gap and probability of improvement over a score CSV.
    Stats {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        target: f64,
        #[arg(long, default_value_t = 2000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(args: &RunArgs) -> Result<(RunConfig, Vec<u64>)> {
    let cfg = RunConfig::load(&args.config)?;
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs must be >= 1".into()));
    }
    let seeds = args.seeds.clone().unwrap_or_else(|| cfg.seeds.clone());
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds: at least one seed is required".into()));
    }
    Ok((cfg, seeds))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let (cfg, seeds) = load(&a)?;
            for s in commands::train(&cfg, &a.out, &seeds, a.jobs)? {
                println!(
                    "{:<32} seed {:<4} late SR {:.3}  {}",
                    s.cell,
                    s.seed,
                    s.late_success,
                    s.dir.display()
                );
            }
        }
        Command::Evaluate(a) => {
            let (cfg, seeds) = load(&a)?;
            let rows = commands::evaluate(&cfg, &a.out, &seeds, a.jobs)?;
            print!("{}", commands::render_summary(&commands::summarize(&rows)));
        }
        Command::Compare(a) => {
            let (cfg, seeds) = load(&a)?;
            commands::compare(&cfg, &a.out, &seeds, a.jobs)?;
            let text = std::fs::read_to_string(a.out.join("ablation.txt")).map_err(CliError::io(&a.out))?;
            print!("{text}");
            let text = std::fs::read_to_string(a.out.join("rewards.txt")).map_err(CliError::io(&a.out))?;
            print!("{text}");
        }
        Command::Select {
            preorder,
            epsilon,
            comparator,
            cvar_alpha,
            mv_lambda,
            out,
            debug,
            quantiles,
        } => {
            let text = std::fs::read_to_string(&preorder)
                .map_err(|e| CliError::Config(format!("{}: {e}", preorder.display())))?;
            let spec: PreorderSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", preorder.display())))?;
            let res = commands::select_cmd(&commands::SelectArgs {
                preorder: spec,
                epsilon,
                comparator: comparator.into(),
                cvar_alpha,
                mv_lambda,
                quantiles,
            })?;
            if debug {
                eprint!("{}", res.debug);
            }
            if !res.fallbacks.is_empty() {
                eprintln!("fallback kept the best-scored action at objectives {:?}", res.fallbacks);
            }
            match out {
                Some(p) => artifacts::write_text(&p, &res.csv)?,
                None => print!("{}", res.csv),
            }
        }
        Command::Stats {
            scores,
            out,
            target,
            resamples,
            confidence,
            seed,
        } => {
            let text = commands::stats_cmd(&commands::StatsArgs {
                scores,
                out,
                target,
                resamples,
                confidence,
                seed,
            })?;
            print!("{text}");
        }
    }
    Ok(())
}
