use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use emberops::harness::{
    evaluate_policy, mann_whitney_u, replay, run_random_baseline, train_with, HarnessError, RunLog,
    StatsError, TrainOptions,
};
use emberops::ppo::{Checkpoint, CheckpointError, PpoConfig};
use emberops::world::{load_scenario, Scenario, ScenarioError};

/// Moving-average window of the CSV written next to each log.
const CSV_WINDOW: usize = 25;

#[derive(Parser)]
#[command(
    name = "emberops",
    version,
    about = "Wildfire fleet coordination with PPO"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write its log and checkpoints.
    Train {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        /// TOML file with PPO settings; omitted keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random-tactics benchmark.
    Baseline {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy rollouts of a frozen checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mann-Whitney U test on the final MoEs of two logs, printed as JSON.
    Compare {
        #[arg(long)]
        log_a: PathBuf,
        #[arg(long)]
        log_b: PathBuf,
    },
    /// Replay one greedy episode and write a PGM frame per step.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        frames: PathBuf,
    },
    /// Moving average of a log's final MoEs as CSV on stdout.
    Stats {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 25)]
        window: usize,
    },
}

/// Exit status 2 for bad input, 3 for failures while running.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidArgument(_)
            | HarnessError::CheckpointMismatch { .. }
            | HarnessError::Stats(_)
            | HarnessError::Log { .. } => Failure::Validation(e.into()),
            HarnessError::Checkpoint(c) => c.into(),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io(_) => Failure::Runtime(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Runtime(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure::Validation(e.into())
    }
}

fn scenario(path: &Path) -> Result<Arc<Scenario>, Failure> {
    Ok(Arc::new(load_scenario(path)?))
}

fn ppo_config(path: Option<&Path>) -> Result<PpoConfig, Failure> {
    let Some(path) = path else {
        return Ok(PpoConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Runtime)?;
    let cfg: PpoConfig = toml::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(Failure::Validation)?;
    cfg.check().map_err(|key| {
        Failure::Validation(anyhow::anyhow!("invalid `{key}` in {}", path.display()))
    })?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::Runtime)?;
    Ok(BufWriter::new(f))
}

/// `log.jsonl`, `timing.csv`, `moe.csv` and `quartiles.csv` in `dir`.
fn write_outputs(dir: &Path, log: &RunLog, label: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)?;
    let mut w = create(&dir.join("log.jsonl"))?;
    log.write_jsonl(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("timing.csv"))?;
    log.write_timing_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("moe.csv"))?;
    log.write_moe_csv(&mut w, CSV_WINDOW.min(log.len()))?;
    w.flush()?;
    let mut w = create(&dir.join("quartiles.csv"))?;
    log.write_quartiles_csv(&mut w, label)?;
    w.flush()?;
    Ok(())
}

fn summary(label: &str, log: &RunLog) {
    let moes = log.final_moes();
    let mean = moes.iter().sum::<f64>() / moes.len() as f64;
    eprintln!("{label}: {} episodes, mean final MoE {mean:.4}", moes.len());
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            scenario: sc,
            episodes,
            seed,
            config,
            out,
        } => {
            let sc = scenario(&sc)?;
            let cfg = ppo_config(config.as_deref())?;
            std::fs::create_dir_all(&out)?;
            let opts = TrainOptions {
                out_dir: Some(out.clone()),
            };
            let mut recent = Vec::new();
            let trained = train_with(sc, &cfg, episodes, seed, &opts, |rec, diag| {
                recent.push(rec.final_moe);
                if recent.len() == 100 || rec.episode + 1 == episodes {
                    let m = recent.iter().sum::<f64>() / recent.len() as f64;
                    eprintln!(
                        "episode {:>6}  mean MoE {m:.4}  entropy {:.3}  kl {:.5}",
                        rec.episode + 1,
                        diag.entropy,
                        diag.approx_kl
                    );
                    recent.clear();
                }
            })?;
            write_outputs(&out, &trained.log, "train")?;
            summary("train", &trained.log);
        }
        Command::Baseline {
            scenario: sc,
            episodes,
            seed,
            out,
        } => {
            let log = run_random_baseline(scenario(&sc)?, episodes, seed)?;
            write_outputs(&out, &log, "baseline")?;
            summary("baseline", &log);
        }
        Command::Eval {
            checkpoint,
            scenario: sc,
            episodes,
            seed,
            out,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let log = evaluate_policy(&ck, scenario(&sc)?, episodes, seed)?;
            write_outputs(&out, &log, "eval")?;
            summary("eval", &log);
        }
        Command::Compare { log_a, log_b } => {
            let a = RunLog::load(&log_a)?.final_moes();
            let b = RunLog::load(&log_b)?.final_moes();
            let report = mann_whitney_u(&a, &b)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
            println!("{json}");
        }
        Command::Replay {
            scenario: sc,
            checkpoint,
            seed,
            frames,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let rec = replay(&ck, scenario(&sc)?, seed, &frames)?;
            eprintln!(
                "{} steps, final MoE {:.4}, {:?}; frames in {}",
                rec.steps,
                rec.final_moe,
                rec.termination,
                frames.display()
            );
        }
        Command::Stats { log, window } => {
            let log = RunLog::load(&log)?;
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            log.write_moe_csv(&mut w, window)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
