//! Multi-worker asynchronous training around the returns kernel and the
//! network.
//!
//! Each worker repeats: snapshot the shared parameters, roll out up to
//! `window` steps under that snapshot, build the mixed TD targets, compute
//! the combined gradient, clip it, and fold it into the shared store with
//! shared-statistics RMSProp at the annealed learning rate. Every
//! `eval_interval_steps` environment steps, whichever worker crosses the
//! boundary runs an evaluation round and writes a checkpoint.
//!
//! With `workers = 1` everything runs on the calling thread and a run is
//! bitwise reproducible from `(config, seed)`.

mod config;
mod evaluate;
mod runlog;
mod store;
mod worker;

pub use config::{anneal_lr, ConfigError, MixerSpec, TrainConfig};
pub use evaluate::{evaluate, evaluate_detailed, EvalEpisodeOutcome};
pub use runlog::{LogSink, Record, RunLog, RunLogError, ValueChange};
pub use store::ParameterStore;

use crate::env::{make_env, EnvError};
use crate::net::{init_params, NetError, NetworkSpec, ParamVector};
use crate::returns::{MixerConfig, ReturnsError};
use rand::Rng;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Returns(#[from] ReturnsError),
    #[error(transparent)]
    Log(#[from] RunLogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("learning rate {0} must be finite and >= 0")]
    BadLearningRate(f64),
    #[error("non-finite parameter entered the store")]
    NonFiniteParameters,
    #[error("{streak} consecutive non-finite updates at step {step}; aborting run")]
    TooManyNonFiniteUpdates { streak: usize, step: u64 },
}

/// splitmix64; used to derive worker/episode/eval seeds from the run seed.
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF sampling from a probability vector.
pub(crate) fn sample_categorical<R: Rng>(policy: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (a, &p) in policy.iter().enumerate() {
        if p > 0.0 {
            last_positive = a;
        }
        cumulative += p;
        if u < cumulative {
            return a;
        }
    }
    last_positive
}

/// Claims evaluation boundaries exactly once across workers and hands out
/// run-global evaluation-episode indices.
pub(crate) struct EvalGate {
    next_due: AtomicU64,
    interval: u64,
    eval_counter: AtomicU64,
    episode_counter: AtomicU64,
}

impl EvalGate {
    fn new(interval: u64) -> Self {
        EvalGate {
            next_due: AtomicU64::new(interval),
            interval,
            eval_counter: AtomicU64::new(0),
            episode_counter: AtomicU64::new(0),
        }
    }

    /// If `current_step` has crossed the next boundary, claim it and return
    /// the evaluation index.
    fn try_claim(&self, current_step: u64) -> Option<u64> {
        loop {
            let due = self.next_due.load(Ordering::SeqCst);
            if current_step < due {
                return None;
            }
            if self
                .next_due
                .compare_exchange(due, due + self.interval, Ordering::SeqCst, Ordering::SeqCst)
                .is_ok()
            {
                return Some(self.eval_counter.fetch_add(1, Ordering::SeqCst));
            }
        }
    }

    fn claim_final(&self) -> u64 {
        self.eval_counter.fetch_add(1, Ordering::SeqCst)
    }

    pub(crate) fn next_episode_index(&self) -> u64 {
        self.episode_counter.fetch_add(1, Ordering::SeqCst)
    }
}

/// Everything a worker borrows from the run.
pub(crate) struct Shared<'a> {
    pub config: &'a TrainConfig,
    pub mixer: MixerConfig,
    pub store: &'a ParameterStore,
    pub sink: &'a LogSink,
    pub ckpt_dir: Option<&'a Path>,
    pub eval_gate: &'a EvalGate,
    pub deadline: Option<Instant>,
    pub run_seed: u64,
}

/// Result of one training run.
pub struct TrainOutput {
    pub log: RunLog,
    pub final_step: u64,
    pub final_params: ParamVector,
    /// `(global_step, path)` of every checkpoint written.
    pub checkpoints: Vec<(u64, PathBuf)>,
}

/// Train once with the given seed. `log_path` streams the run log as
/// ndjson; `ckpt_dir` receives `ckpt_<global_step>.bin` files at every
/// evaluation point plus a final one.
pub fn train(
    config: &TrainConfig,
    seed: u64,
    log_path: Option<&Path>,
    ckpt_dir: Option<&Path>,
) -> Result<TrainOutput, TrainError> {
    run(config, seed, log_path, ckpt_dir, None).map(|(out, _)| out)
}

/// Run the training loop for a fixed wall-clock window (no evaluations or
/// checkpoints) and report `(environment_steps, elapsed_seconds)`.
pub fn measure_throughput(
    config: &TrainConfig,
    seed: u64,
    window: Duration,
) -> Result<(u64, f64), TrainError> {
    let mut config = config.clone();
    config.total_steps = u64::MAX / 2;
    config.eval_interval_steps = u64::MAX / 2;
    let (out, elapsed) = run(&config, seed, None, None, Some(window))?;
    Ok((out.final_step, elapsed.as_secs_f64()))
}

fn run(
    config: &TrainConfig,
    seed: u64,
    log_path: Option<&Path>,
    ckpt_dir: Option<&Path>,
    time_limit: Option<Duration>,
) -> Result<(TrainOutput, Duration), TrainError> {
    config.validate()?;
    let mixer = config.mixer_config();
    let probe = make_env(&config.env_name)?;
    let net_spec = NetworkSpec::new(probe.spec().observation_dim, probe.spec().action_count);
    drop(probe);
    let params = init_params(&net_spec, seed)?;
    let store = ParameterStore::new(params);
    let sink = LogSink::new(log_path)?;
    if let Some(dir) = ckpt_dir {
        std::fs::create_dir_all(dir)?;
    }
    sink.append(Record::Meta {
        step: 0,
        worker: 0,
        env: config.env_name.clone(),
        mode: mixer.mode,
        lambda: mixer.lambda,
        window: mixer.window,
        gamma: config.gamma,
        total_steps: config.total_steps,
        seed,
        workers: config.workers,
    })?;
    let eval_gate = EvalGate::new(config.eval_interval_steps);
    let deadline = time_limit.map(|d| Instant::now() + d);
    let shared = Shared {
        config,
        mixer,
        store: &store,
        sink: &sink,
        ckpt_dir,
        eval_gate: &eval_gate,
        deadline,
        run_seed: seed,
    };

    let started = Instant::now();
    if config.workers == 1 {
        worker::worker_loop(0, &shared)?;
    } else {
        std::thread::scope(|scope| -> Result<(), TrainError> {
            let mut handles = Vec::with_capacity(config.workers);
            for worker_id in 0..config.workers as u32 {
                let shared = &shared;
                handles.push(scope.spawn(move || worker::worker_loop(worker_id, shared)));
            }
            for handle in handles {
                handle.join().expect("worker panicked")?;
            }
            Ok(())
        })?;
    }
    let elapsed = started.elapsed();

    // Final evaluation and checkpoint at the closing step count.
    if time_limit.is_none() {
        let eval_index = eval_gate.claim_final();
        worker::run_evaluation(&shared, 0, eval_index)?;
    }

    let final_step = store.global_step();
    let final_params = store.snapshot();
    let log = sink.finish()?;
    let checkpoints = match ckpt_dir {
        Some(dir) => log
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Checkpoint { step, path, .. } => Some((*step, dir.join(path))),
                _ => None,
            })
            .collect(),
        None => Vec::new(),
    };
    Ok((
        TrainOutput {
            log,
            final_step,
            final_params,
            checkpoints,
        },
        elapsed,
    ))
}
