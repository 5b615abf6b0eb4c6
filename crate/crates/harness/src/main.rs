use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use viralsim_harness::{csv, plot, sweep};
use viralsim_core::config::SimConfig;
use viralsim_core::superagent::{self, Checkpoint};

/// Agent-based news-cascade simulator with a learned supervising agent.
#[derive(Parser)]
#[command(name = "viralsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Simulation parameter file (TOML). Built-in defaults apply if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path. Sweeps print CSV to stdout when omitted; `train`
    /// defaults to checkpoint.json, `plot` to virality.svg.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replicates per grid cell (default 300).
    #[arg(long, global = true)]
    replicates: Option<u32>,

    /// Trained checkpoint to evaluate.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,

    /// Worker threads for sweep execution (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Virality sweep with no supervising agent.
    Baseline(SweepArgs),
    /// Train the supervising agent and write a checkpoint.
    Train {
        /// Episode count; overrides the config's training table.
        #[arg(long)]
        episodes: Option<u32>,
    },
    /// Virality sweep under a frozen checkpoint's greedy policy.
    Evaluate(SweepArgs),
    /// General sweep: supervised when --checkpoint is given, baseline
    /// otherwise.
    Sweep(SweepArgs),
    /// Chart one or more sweep CSVs as a standalone SVG.
    Plot {
        /// Input CSVs produced by the sweep commands.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Activation thresholds to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,

    /// p_n grid, comma separated (default 0.0 to 1.0 step 0.1).
    #[arg(long = "p-n-grid", value_delimiter = ',')]
    p_n_grid: Option<Vec<f64>>,

    /// Opinion-polarization threshold reduction inside the chamber.
    #[arg(long = "p-o")]
    p_o: Option<f64>,

    /// Supervisor cadence in ticks (supervised sweeps only).
    #[arg(long = "sa-delay")]
    sa_delay: Option<u32>,

    /// Also write every replicate's seed and final cascade to this path.
    #[arg(long = "per-run-out")]
    per_run_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if matches!(cli.command, Command::Evaluate(_)) && cli.checkpoint.is_none() {
        eprintln!("error: evaluate requires --checkpoint <path>");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker pool")?;
    }

    let mut config = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let master_seed = config.seed;
    let replicates = cli.replicates.unwrap_or(300);

    match &cli.command {
        Command::Baseline(args) => {
            if args.sa_delay.is_some() {
                bail!("baseline sweeps take no --sa-delay");
            }
            let spec = build_spec(&config, args, replicates, master_seed, None);
            let result = sweep::run_baseline_sweep(&config, &spec)?;
            write_sweep(&cli, args, &result)
        }
        Command::Train { episodes } => {
            if let Some(episodes) = episodes {
                config.training.episodes = *episodes;
            }
            let report = superagent::train(&config, master_seed)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("checkpoint.json"));
            report.checkpoint.save(&out)?;
            let rewards = &report.episode_rewards;
            let window = rewards.len().min(50);
            let head: f64 = rewards[..window].iter().sum::<f64>() / window as f64;
            let tail: f64 =
                rewards[rewards.len() - window..].iter().sum::<f64>() / window as f64;
            eprintln!(
                "trained {} episodes (seed {master_seed}); mean reward {head:.3} -> {tail:.3}; \
                 checkpoint written to {}",
                report.checkpoint.episodes_trained,
                out.display()
            );
            Ok(())
        }
        Command::Evaluate(args) | Command::Sweep(args) if cli.checkpoint.is_some() => {
            let path = cli.checkpoint.as_ref().unwrap();
            let checkpoint = Checkpoint::load(path)?;
            let delay = args.sa_delay.unwrap_or(config.sa_delay);
            let spec = build_spec(&config, args, replicates, master_seed, Some(delay));
            let result = sweep::run_sa_sweep(&config, &spec, &checkpoint)?;
            write_sweep(&cli, args, &result)
        }
        Command::Sweep(args) => {
            if args.sa_delay.is_some() {
                bail!("--sa-delay needs a --checkpoint to act with");
            }
            let spec = build_spec(&config, args, replicates, master_seed, None);
            let result = sweep::run_baseline_sweep(&config, &spec)?;
            write_sweep(&cli, args, &result)
        }
        Command::Evaluate(_) => unreachable!("guarded in main"),
        Command::Plot { csv } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("virality.svg"));
            plot::plot_virality(csv, &out)?;
            eprintln!("chart written to {}", out.display());
            Ok(())
        }
    }
}

fn build_spec(
    config: &SimConfig,
    args: &SweepArgs,
    replicates: u32,
    master_seed: u64,
    sa_delay: Option<u32>,
) -> sweep::SweepSpec {
    sweep::SweepSpec {
        theta_values: args
            .theta
            .clone()
            .unwrap_or_else(|| sweep::DEFAULT_THETAS.to_vec()),
        p_n_grid: args
            .p_n_grid
            .clone()
            .unwrap_or_else(sweep::default_p_n_grid),
        p_o: args.p_o.unwrap_or(config.p_o),
        sa_delay,
        replicates,
        master_seed,
    }
}

fn write_sweep(cli: &Cli, args: &SweepArgs, result: &sweep::SweepResult) -> Result<()> {
    if let Some(per_run) = &args.per_run_out {
        csv::emit_per_run_csv(result, per_run)?;
    }
    match &cli.out {
        Some(path) => {
            csv::emit_csv(result, path)?;
            eprintln!(
                "{} grid cells x {} replicates written to {}",
                result.rows.len(),
                result.rows.first().map(|r| r.replicates).unwrap_or(0),
                path.display()
            );
        }
        None => csv::emit_csv_to(result, std::io::stdout().lock())?,
    }
    Ok(())
}
