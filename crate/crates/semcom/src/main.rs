//! Command-line front end: train agents, evaluate policies, run seeded
//! sweeps, solve oracle instances, and run the self-check suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure,
//! 3 self-check failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semcom::config::SystemConfig;
use semcom::env::{Phase, SemComEnv};
use semcom::harness::{
    emit_csv, emit_plotdata, emit_training_csv, evaluate_policy, load_checkpoint, oracle_csv,
    run_power_sweep, run_user_sweep, save_checkpoint, train_from_config, Checkpoint, MetricStat,
    Policy, PolicyKind,
};

#[derive(Parser)]
#[command(name = "semcom", version, about = "Energy-minimal semantic-communication resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Training,
    Inference,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Training => Phase::Training,
            PhaseArg::Inference => Phase::Inference,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Drgo,
    Random,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Drgo => PolicyKind::Drgo,
            PolicyArg::Random => PolicyKind::Random,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario phase.
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
    /// Where result files go.
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write a checkpoint plus per-episode metrics.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides ddpg.train_episodes.
        #[arg(long)]
        episodes: Option<u32>,
    },
    /// Evaluate a checkpointed agent (or the random baseline) greedily.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Agent checkpoint; evaluates the random baseline when omitted.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of evaluation episodes.
        #[arg(long, default_value_t = 10)]
        episodes: u32,
    },
    /// Sweep the per-user power cap.
    SweepPower {
        #[command(flatten)]
        common: Common,
        /// Comma-separated cap values in dBm.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 5.0, 10.0, 15.0])]
        dbm: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, value_enum, default_value = "drgo")]
        policy: PolicyArg,
        /// Overrides ddpg.train_episodes for the per-point training.
        #[arg(long)]
        train_episodes: Option<u32>,
    },
    /// Sweep the number of users.
    SweepUsers {
        #[command(flatten)]
        common: Common,
        /// Comma-separated user counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 6, 8, 10])]
        users: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, value_enum, default_value = "drgo")]
        policy: PolicyArg,
        #[arg(long)]
        train_episodes: Option<u32>,
    },
    /// Exhaustive grid search on fresh states; writes one row per state.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Number of states to solve.
        #[arg(long, default_value_t = 10)]
        states: u32,
        /// Minimum selected users per grid point.
        #[arg(long)]
        min_selected: Option<usize>,
    },
    /// Run the self-check suite; exits 3 if any check fails.
    Verify,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type CliError = (u8, String);

fn load_config(common: &Common) -> Result<SystemConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => SystemConfig::load(path).map_err(|e| (1, e.to_string()))?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(phase) = common.phase {
        cfg.phase = phase.into();
    }
    Ok(cfg)
}

fn prepare_outdir(common: &Common, cfg: &SystemConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&common.outdir)
        .map_err(|e| (2, format!("creating {}: {e}", common.outdir.display())))?;
    let path = common.outdir.join("effective_config.toml");
    std::fs::write(&path, cfg.dump()).map_err(|e| (2, format!("writing {}: {e}", path.display())))?;
    println!("effective config hash: {:016x}", cfg.hash());
    Ok(())
}

fn runtime<T>(r: semcom::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| (2, e.to_string()))
}

fn run() -> Result<ExitCode, CliError> {
    match Cli::parse().command {
        Command::Train { common, episodes } => {
            let mut cfg = load_config(&common)?;
            if let Some(ep) = episodes {
                cfg.ddpg.train_episodes = ep;
            }
            cfg.validate().map_err(|e| (1, e.to_string()))?;
            prepare_outdir(&common, &cfg)?;

            let result = runtime(train_from_config(&cfg))?;
            let ck = Checkpoint::from_agent(
                &result.agent,
                cfg.seed,
                cfg.ddpg.warmup_episodes + cfg.ddpg.train_episodes,
                cfg.phase,
            );
            runtime(save_checkpoint(&ck, &common.outdir.join("checkpoint.json")))?;
            runtime(emit_training_csv(&result.episodes, &common.outdir.join("training.csv")))?;

            let tail: Vec<_> = result.episodes.iter().rev().take(20).collect();
            let mean = |f: fn(&semcom::ddpg::EpisodeMetrics) -> f64| -> f64 {
                tail.iter().map(|e| f(e)).sum::<f64>() / tail.len() as f64
            };
            println!(
                "trained {} episodes ({} warmup); last-20 mean reward {:.4}, energy {:.3e} J, violation rate {:.3}",
                result.episodes.len(),
                cfg.ddpg.warmup_episodes,
                mean(|e| e.mean_reward),
                mean(|e| e.mean_energy_j),
                mean(|e| e.violation_rate),
            );
            println!("checkpoint: {}", common.outdir.join("checkpoint.json").display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Evaluate {
            common,
            checkpoint,
            episodes,
        } => {
            let cfg = load_config(&common)?;
            prepare_outdir(&common, &cfg)?;
            let mut env = runtime(cfg.env_config().and_then(SemComEnv::new))?;

            let agent = match &checkpoint {
                Some(path) => Some(runtime(load_checkpoint(path))?.into_agent()),
                None => None,
            };
            let policy = match &agent {
                Some(agent) => Policy::Greedy(agent),
                None => Policy::Random,
            };
            let runs = runtime(evaluate_policy(
                &mut env,
                &policy,
                episodes,
                cfg.ddpg.steps_per_episode,
                cfg.seed,
                cfg.phase,
            ))?;

            let mut text = String::from("episode,energy_j,delay_s,reward,violation_rate\n");
            for (i, e) in runs.iter().enumerate() {
                writeln!(text, "{},{},{},{},{}", i, e.energy_j, e.delay_s, e.reward, e.violation_rate)
                    .expect("string write");
            }
            let path = common.outdir.join("evaluation.csv");
            std::fs::write(&path, text).map_err(|e| (2, format!("writing {}: {e}", path.display())))?;

            let energy = MetricStat::from_samples(&runs.iter().map(|e| e.energy_j).collect::<Vec<_>>());
            let delay = MetricStat::from_samples(&runs.iter().map(|e| e.delay_s).collect::<Vec<_>>());
            let viol = MetricStat::from_samples(&runs.iter().map(|e| e.violation_rate).collect::<Vec<_>>());
            println!(
                "{} episodes: energy {:.3e} +- {:.1e} J, delay {:.3e} +- {:.1e} s, violation rate {:.3}",
                episodes, energy.mean, energy.std, delay.mean, delay.std, viol.mean
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::SweepPower {
            common,
            dbm,
            runs,
            policy,
            train_episodes,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(ep) = train_episodes {
                cfg.ddpg.train_episodes = ep;
            }
            cfg.validate().map_err(|e| (1, e.to_string()))?;
            prepare_outdir(&common, &cfg)?;
            let sweep = runtime(run_power_sweep(&cfg, &dbm, runs, policy.into()))?;
            emit_sweep(&sweep, &common.outdir, "sweep_power")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::SweepUsers {
            common,
            users,
            runs,
            policy,
            train_episodes,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(ep) = train_episodes {
                cfg.ddpg.train_episodes = ep;
            }
            cfg.validate().map_err(|e| (1, e.to_string()))?;
            prepare_outdir(&common, &cfg)?;
            let sweep = runtime(run_user_sweep(&cfg, &users, runs, policy.into()))?;
            emit_sweep(&sweep, &common.outdir, "sweep_users")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Oracle {
            common,
            states,
            min_selected,
        } => {
            let cfg = load_config(&common)?;
            prepare_outdir(&common, &cfg)?;
            let min = min_selected.unwrap_or(cfg.user_count);
            let path = common.outdir.join("oracle.csv");
            runtime(oracle_csv(&cfg, states, min, &path))?;
            println!("oracle results: {}", path.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify => {
            let mut failures = 0;
            for check in semcom::verify::run_all() {
                println!(
                    "[{}] {} — {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
                failures += !check.passed as u32;
            }
            if failures > 0 {
                eprintln!("{failures} check(s) failed");
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn emit_sweep(
    sweep: &semcom::harness::SweepResult,
    outdir: &Path,
    stem: &str,
) -> Result<(), CliError> {
    let csv = outdir.join(format!("{stem}.csv"));
    let dat = outdir.join(format!("{stem}.dat"));
    runtime(emit_csv(sweep, &csv))?;
    runtime(emit_plotdata(sweep, &dat))?;
    println!("sweep results: {} and {}", csv.display(), dat.display());
    Ok(())
}
