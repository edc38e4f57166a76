//! `wlsbx`: reproduces the simulator, learning, pipeline, sweep and oracle
//! experiments as CSV artifacts, each with a manifest that can rerun it.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Resolved};

#[derive(Debug, Parser)]
#[command(name = "wlsbx", version, about = "OBSS WLAN simulator, bandit TPC and ML sandbox pipeline")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for independent runs; 0 picks the number of CPUs.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario file (JSON). Defaults to the built-in two-BSS scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RewardArg {
    Shared,
    Own,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a fixed configuration and write per-BSS throughput.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Simulated seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Also write the event trace.
        #[arg(long)]
        trace: bool,
    },
    /// Run one decentralized learning episode and write its trace.
    Learn {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// eps-greedy, ucb1 or thompson (default hyperparameters).
        #[arg(long, default_value = "eps-greedy")]
        policy: String,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Simulated seconds per iteration.
        #[arg(long, default_value_t = 5.0)]
        iter_duration: f64,
        #[arg(long, value_enum, default_value_t = RewardArg::Shared)]
        reward: RewardArg,
    },
    /// Characterize, evaluate, deploy and monitor on an emulated underlay.
    Pipeline {
        /// Scenario the underlay is built from; `--seed` draws its perturbation.
        #[arg(long)]
        underlay: Option<PathBuf>,
        /// Marketplace directory; created with the default models if missing.
        #[arg(long)]
        marketplace: Option<PathBuf>,
        /// Pipeline configuration file (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use an unperturbed underlay.
        #[arg(long)]
        exact: bool,
    },
    /// Throughput variability and wall-clock cost versus simulated duration.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Ascending simulated durations in seconds.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 10.0, 50.0, 100.0])]
        durations: Vec<f64>,
        /// Number of seeds, starting at `--seed`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
    /// Evaluate every joint power configuration, best first.
    Oracle {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        /// Maximum number of joint configurations.
        #[arg(long, default_value_t = wlan_sandbox::sandbox::DEFAULT_ORACLE_CAP)]
        cap: u64,
    },
    /// Write default scenario, pipeline configuration and marketplace files.
    Init,
    /// Re-execute the run described by a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn resolve(cli: &Cli) -> Result<Option<Resolved>, CliError> {
    let seeds_from = |n: u64| (cli.seed..cli.seed.saturating_add(n)).collect::<Vec<_>>();
    Ok(Some(match &cli.command {
        Command::Simulate {
            scenario,
            duration,
            trace,
        } => Resolved::Simulate {
            scenario: commands::load_scenario(scenario.scenario.as_deref())?,
            duration_s: *duration,
            trace: *trace,
        },
        Command::Learn {
            scenario,
            policy,
            iterations,
            iter_duration,
            reward,
        } => Resolved::Learn {
            scenario: commands::load_scenario(scenario.scenario.as_deref())?,
            policy: wlan_sandbox::bandit::PolicyKind::from_name(policy).ok_or_else(|| {
                CliError::input(format!(
                    "unknown policy `{policy}`; expected eps-greedy, ucb1 or thompson"
                ))
            })?,
            iterations: *iterations,
            iter_duration_s: *iter_duration,
            reward: match reward {
                RewardArg::Shared => wlan_sandbox::bandit::RewardMode::Shared,
                RewardArg::Own => wlan_sandbox::bandit::RewardMode::Own,
            },
        },
        Command::Pipeline {
            underlay,
            marketplace,
            config,
            exact,
        } => Resolved::Pipeline {
            underlay: commands::load_scenario(underlay.as_deref())?,
            exact: *exact,
            // relative manifest paths resolve against the output directory
            marketplace: match marketplace {
                Some(p) => std::path::absolute(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
                None => PathBuf::from("marketplace"),
            },
            config: commands::load_pipeline_config(config.as_deref())?,
        },
        Command::Sweep {
            scenario,
            durations,
            seeds,
        } => Resolved::Sweep {
            scenario: commands::load_scenario(scenario.scenario.as_deref())?,
            durations_s: durations.clone(),
            seeds: seeds_from(*seeds),
        },
        Command::Oracle {
            scenario,
            seeds,
            duration,
            cap,
        } => Resolved::Oracle {
            scenario: commands::load_scenario(scenario.scenario.as_deref())?,
            seeds: seeds_from(*seeds),
            duration_s: *duration,
            cap: *cap,
        },
        Command::Init => {
            commands::init(&cli.out)?;
            return Ok(None);
        }
        Command::Rerun { manifest } => manifest::load(manifest)?.resolved()?,
    }))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::other(e.to_string()))?;
    }
    let Some(resolved) = resolve(cli)? else {
        return Ok(());
    };
    let seed = match &cli.command {
        Command::Rerun { manifest } => manifest::load(manifest)?.seed,
        _ => cli.seed,
    };
    commands::execute(&resolved, seed, cli.jobs, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wlsbx: {e}");
            ExitCode::from(e.code)
        }
    }
}
