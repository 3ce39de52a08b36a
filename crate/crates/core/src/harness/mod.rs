//! Training, baseline and evaluation runs plus their statistics and logs.

mod log;
mod stats;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::env::{EnvError, Environment, ObsNormalization};
use crate::fleet::TACTIC_COUNT;
use crate::ppo::{
    argmax_actions, policy_forward, ppo_update, sample_actions, Adam, Checkpoint, CheckpointError,
    PolicyParams, PpoConfig, PpoError, Trajectory, UpdateDiagnostics,
};
use crate::rng::{hash64, stream_rng, Stream};
use crate::world::{BurnPhase, GridMap, Scenario};

pub use log::{EpisodeRecord, RunLog, StepRecord};
pub use stats::{
    mann_whitney_u, mean, median, moving_average, quartiles, Quartiles, StatsError, StatsReport,
};

/// Environment variable overriding the rollout worker count.
pub const WORKERS_ENV: &str = "EMBEROPS_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(
        "checkpoint expects {ck_inputs} inputs and {ck_fleet} aircraft, scenario has {inputs} and {fleet}"
    )]
    CheckpointMismatch {
        ck_inputs: usize,
        ck_fleet: usize,
        inputs: usize,
        fleet: usize,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {reason}")]
    Log { line: usize, reason: String },
}

pub fn episode_seed(master_seed: u64, episode: usize) -> u64 {
    hash64(master_seed, episode as u64)
}

/// Worker count: `EMBEROPS_WORKERS` when set to a positive integer, else the
/// available parallelism.
pub fn workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Decision rule for one step: actions, their log-probability and the value
/// estimate of the state.
pub trait Controller {
    fn act(&mut self, state: &[f64]) -> Result<(Vec<usize>, f64, f64), HarnessError>;
}

/// Uniform random tactic per aircraft.
pub struct RandomController<R> {
    pub fleet_size: usize,
    pub rng: R,
}

impl<R: Rng> Controller for RandomController<R> {
    fn act(&mut self, _: &[f64]) -> Result<(Vec<usize>, f64, f64), HarnessError> {
        let a = (0..self.fleet_size)
            .map(|_| self.rng.random_range(0..TACTIC_COUNT))
            .collect();
        Ok((
            a,
            -(self.fleet_size as f64) * (TACTIC_COUNT as f64).ln(),
            0.0,
        ))
    }
}

/// Samples from the policy.
pub struct SamplingController<'a, R> {
    pub params: &'a PolicyParams,
    pub rng: R,
}

impl<R: Rng> Controller for SamplingController<'_, R> {
    fn act(&mut self, state: &[f64]) -> Result<(Vec<usize>, f64, f64), HarnessError> {
        let out = policy_forward(self.params, state)?;
        let (a, lp) = sample_actions(&out.logits, &mut self.rng)?;
        Ok((a, lp, out.value))
    }
}

/// Most likely tactic per aircraft.
pub struct GreedyController<'a> {
    pub params: &'a PolicyParams,
}

impl Controller for GreedyController<'_> {
    fn act(&mut self, state: &[f64]) -> Result<(Vec<usize>, f64, f64), HarnessError> {
        let out = policy_forward(self.params, state)?;
        let a = argmax_actions(&out.logits);
        let lp = crate::ppo::joint_log_prob(&out.logits, &a);
        Ok((a, lp, out.value))
    }
}

/// Runs one full episode. When `traj` is given the experience is appended
/// to it.
pub fn rollout<C: Controller>(
    env: &mut Environment,
    episode: usize,
    seed: u64,
    controller: &mut C,
    mut traj: Option<&mut Trajectory>,
) -> Result<EpisodeRecord, HarnessError> {
    let started = Instant::now();
    let mut state = env.reset(seed)?;
    let mut trace = Vec::new();
    loop {
        let (actions, log_prob, value) = controller.act(&state)?;
        let r = env.step(&actions)?;
        trace.push(StepRecord {
            step: trace.len() as u32 + 1,
            actions: actions.clone(),
            reward: r.reward,
            moe: r.moe,
        });
        if let Some(t) = traj.as_deref_mut() {
            t.push(state, actions, log_prob, r.reward, value, r.done);
        }
        state = r.next_state;
        if r.done {
            return Ok(EpisodeRecord {
                episode,
                seed,
                final_moe: r.moe,
                steps: trace.len() as u32,
                termination: r.termination,
                wall_ms: started.elapsed().as_millis() as u64,
                trace,
            });
        }
    }
}

/// Runs `f(episode)` for `0..episodes` on the worker pool, results in
/// episode order.
fn run_parallel<T, F>(episodes: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers())
            .build()
            .map_err(|e| HarnessError::Io(std::io::Error::other(e)))?;
        pool.install(|| (0..episodes).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..episodes).map(f).collect()
    }
}

/// Independent uniform tactics for every aircraft at every step.
pub fn run_random_baseline(
    scenario: Arc<Scenario>,
    episodes: usize,
    master_seed: u64,
) -> Result<RunLog, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::InvalidArgument("episodes must be at least 1"));
    }
    let env = Environment::new(scenario);
    let records = run_parallel(episodes, |i| {
        let seed = episode_seed(master_seed, i);
        let mut c = RandomController {
            fleet_size: env.fleet_size(),
            rng: stream_rng(seed, Stream::Baseline),
        };
        rollout(&mut env.clone(), i, seed, &mut c, None)
    })?;
    Ok(RunLog { episodes: records })
}

fn check_dims(params: &PolicyParams, env: &Environment) -> Result<(), HarnessError> {
    if params.input_dim != env.observation_len() || params.fleet_size != env.fleet_size() {
        return Err(HarnessError::CheckpointMismatch {
            ck_inputs: params.input_dim,
            ck_fleet: params.fleet_size,
            inputs: env.observation_len(),
            fleet: env.fleet_size(),
        });
    }
    Ok(())
}

/// Frozen-policy rollouts with argmax actions.
pub fn evaluate_policy(
    checkpoint: &Checkpoint,
    scenario: Arc<Scenario>,
    episodes: usize,
    master_seed: u64,
) -> Result<RunLog, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::InvalidArgument("episodes must be at least 1"));
    }
    let env = Environment::new(scenario);
    check_dims(&checkpoint.params, &env)?;
    let records = run_parallel(episodes, |i| {
        let mut c = GreedyController {
            params: &checkpoint.params,
        };
        rollout(
            &mut env.clone(),
            i,
            episode_seed(master_seed, i),
            &mut c,
            None,
        )
    })?;
    Ok(RunLog { episodes: records })
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Directory for periodic and final checkpoints; none are written when unset.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub log: RunLog,
    pub updates: Vec<UpdateDiagnostics>,
}

pub fn checkpoint_path(dir: &Path, episode: usize) -> PathBuf {
    dir.join(format!("checkpoint_{episode:06}.bin"))
}

pub const FINAL_CHECKPOINT: &str = "policy.bin";

/// On-policy training: every episode is rolled out with the current policy
/// and then used for one update.
pub fn train(
    scenario: Arc<Scenario>,
    cfg: &PpoConfig,
    episodes: usize,
    master_seed: u64,
    opts: &TrainOptions,
) -> Result<TrainOutput, HarnessError> {
    train_with(scenario, cfg, episodes, master_seed, opts, |_, _| {})
}

/// `train` with a callback after every episode's update.
pub fn train_with<F>(
    scenario: Arc<Scenario>,
    cfg: &PpoConfig,
    episodes: usize,
    master_seed: u64,
    opts: &TrainOptions,
    mut on_episode: F,
) -> Result<TrainOutput, HarnessError>
where
    F: FnMut(&EpisodeRecord, &UpdateDiagnostics),
{
    if episodes == 0 {
        return Err(HarnessError::InvalidArgument("episodes must be at least 1"));
    }
    cfg.check().map_err(HarnessError::InvalidArgument)?;
    let mut env = Environment::new(scenario);
    let norm: ObsNormalization = *env.normalization();
    let mut params = PolicyParams::init(
        env.observation_len(),
        cfg.hidden_width,
        env.fleet_size(),
        &mut stream_rng(master_seed, Stream::Init),
    );
    let mut opt = Adam::new(params.len());
    let mut log = RunLog::default();
    let mut updates = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let seed = episode_seed(master_seed, i);
        let mut traj = Trajectory::default();
        let mut c = SamplingController {
            params: &params,
            rng: stream_rng(seed, Stream::Policy),
        };
        let record = rollout(&mut env, i, seed, &mut c, Some(&mut traj))?;
        traj.finish(cfg.gamma, cfg.gae_lambda)?;
        let diag = ppo_update(
            &mut params,
            &mut opt,
            &traj,
            cfg,
            &mut stream_rng(seed, Stream::Update),
        )?;
        on_episode(&record, &diag);
        updates.push(diag);
        log.episodes.push(record);
        if let Some(dir) = &opts.out_dir {
            if (i + 1) % cfg.checkpoint_every == 0 {
                Checkpoint {
                    params: params.clone(),
                    norm,
                }
                .save(&checkpoint_path(dir, i + 1))?;
            }
        }
    }
    let checkpoint = Checkpoint { params, norm };
    if let Some(dir) = &opts.out_dir {
        checkpoint.save(&dir.join(FINAL_CHECKPOINT))?;
    }
    Ok(TrainOutput {
        checkpoint,
        log,
        updates,
    })
}

/// Plain-text PGM (P2) of the phase codes, maxval 5.
pub fn write_pgm<W: std::io::Write>(mut w: W, map: &GridMap) -> std::io::Result<()> {
    writeln!(
        w,
        "P2\n{} {}\n{}",
        map.width,
        map.height,
        BurnPhase::Burnt.code()
    )?;
    for row in map.cells.chunks(map.width) {
        let line: Vec<String> = row.iter().map(|c| c.phase.code().to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Greedy rollout of one episode writing `frame_<step>.pgm` after the reset
/// and after every step.
pub fn replay(
    checkpoint: &Checkpoint,
    scenario: Arc<Scenario>,
    seed: u64,
    frames_dir: &Path,
) -> Result<EpisodeRecord, HarnessError> {
    let mut env = Environment::new(scenario);
    check_dims(&checkpoint.params, &env)?;
    std::fs::create_dir_all(frames_dir)?;
    let frame = |env: &Environment, step: usize| -> Result<(), HarnessError> {
        let f = std::fs::File::create(frames_dir.join(format!("frame_{step:03}.pgm")))?;
        write_pgm(std::io::BufWriter::new(f), env.map()?)?;
        Ok(())
    };
    let mut c = GreedyController {
        params: &checkpoint.params,
    };
    let started = Instant::now();
    let mut state = env.reset(seed)?;
    frame(&env, 0)?;
    let mut trace = Vec::new();
    loop {
        let (actions, _, _) = c.act(&state)?;
        let r = env.step(&actions)?;
        trace.push(StepRecord {
            step: trace.len() as u32 + 1,
            actions,
            reward: r.reward,
            moe: r.moe,
        });
        frame(&env, trace.len())?;
        state = r.next_state;
        if r.done {
            return Ok(EpisodeRecord {
                episode: 0,
                seed,
                final_moe: r.moe,
                steps: trace.len() as u32,
                termination: r.termination,
                wall_ms: started.elapsed().as_millis() as u64,
                trace,
            });
        }
    }
}
