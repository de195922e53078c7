mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "rulehier",
    version,
    about = "Rule mining over knowledge graphs with rule hierarchies"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pool a dataset's splits and re-split them.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Train, valid and test ratios.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mine rules for the configured targets.
    Learn {
        #[command(flatten)]
        overrides: Overrides,
        /// Directory for one DOT hierarchy per target.
        #[arg(long)]
        emit_hierarchy: Option<PathBuf>,
    },
    /// Rank the test queries with mined rules.
    Eval {
        #[command(flatten)]
        overrides: Overrides,
        /// Rule directory; defaults to `<output>/rules`.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// OAR classification table of a run record, or dataset statistics.
    Stats {
        /// Run record written by `learn`.
        #[arg(long, conflicts_with = "dataset")]
        record: Option<PathBuf>,
        /// Dataset directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Count only reverses under the same relation.
        #[arg(long)]
        same_relation_only: bool,
    },
    /// Sweep prior thresholds and post pruning; writes a CSV.
    Bench {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<u64>>,
        /// Post-pruning settings to sweep, e.g. `true,false`.
        #[arg(long = "post-prune-modes", value_delimiter = ',')]
        post_prune_modes: Option<Vec<bool>>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print every subsumption decider's verdict on two rules.
    Subsume { p: String, q: String },
}

/// Worker count: the configured value (`0` = all cores), capped by
/// `RULEHIER_THREADS`.
fn worker_count(configured: usize) -> Result<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = if configured == 0 { cores } else { configured };
    if let Ok(v) = std::env::var("RULEHIER_THREADS") {
        let cap: usize = v
            .trim()
            .parse()
            .with_context(|| format!("RULEHIER_THREADS must be a positive integer, got `{v}`"))?;
        if cap > 0 {
            n = n.min(cap);
        }
    }
    Ok(n.max(1))
}

fn init_pool(configured: usize) -> Result<()> {
    let n = worker_count(configured)?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("starting the worker pool")?;
    log::info!("{n} worker threads");
    Ok(())
}

fn load_config(path: Option<&PathBuf>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path.map(PathBuf::as_path))?;
    cfg.apply(overrides);
    cfg.validate()?;
    init_pool(cfg.threads)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_ref();
    match cli.command {
        Command::Split {
            input,
            output,
            ratios,
            seed,
        } => {
            let mut split = RunConfig::load(config.map(PathBuf::as_path))?.split;
            if let Some(r) = ratios {
                split.ratios = r
                    .try_into()
                    .map_err(|r: Vec<f64>| anyhow::anyhow!("--ratios needs 3 values, got {}", r.len()))?;
            }
            if let Some(s) = seed {
                split.seed = s;
            }
            commands::cmd_split(&input, &output, split)
        }
        Command::Learn {
            overrides,
            emit_hierarchy,
        } => {
            let cfg = load_config(config, &overrides)?;
            commands::cmd_learn(&cfg, emit_hierarchy.as_deref())
        }
        Command::Eval { overrides, rules } => {
            let cfg = load_config(config, &overrides)?;
            commands::cmd_eval(&cfg, rules.as_deref()).map(drop)
        }
        Command::Stats {
            record,
            dataset,
            same_relation_only,
        } => match (record, dataset) {
            (Some(r), _) => commands::cmd_stats_record(&r),
            (None, Some(d)) => commands::cmd_stats_dataset(&d, same_relation_only),
            (None, None) => {
                let cfg = RunConfig::load(config.map(PathBuf::as_path))?;
                commands::cmd_stats_record(&cfg.output.join("run.record"))
            }
        },
        Command::Bench {
            overrides,
            thresholds,
            post_prune_modes,
            csv,
        } => {
            let mut cfg = load_config(config, &overrides)?;
            if let Some(t) = thresholds {
                cfg.bench.thresholds = t;
            }
            if let Some(p) = post_prune_modes {
                cfg.bench.post_prune = p;
            }
            commands::cmd_bench(&cfg, csv.as_deref()).map(drop)
        }
        Command::Subsume { p, q } => commands::cmd_subsume(&p, &q).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
