//! The supervising agent: observes the simulation every `sa-delay` ticks,
//! picks one of four interventions, and learns a value network from replayed
//! transitions.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, TrainParams};
use crate::dqn::{Adam, Gradients, QNetwork, ACTION_COUNT, LAYER_DIMS};
use crate::error::{Error, Result};
use crate::metrics::{self, ConfigDigest, Observation, RunRecord};
use crate::seed;
use crate::sim::Simulation;

/// Denominator clamp for the action weight; bounds the bonus at
/// `2 / AW_EPSILON` when both observables collapse to zero.
pub const AW_EPSILON: f64 = 0.01;

/// The four interventions, in output-head order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Warning,
    Reiterating,
    Forcing,
    Observing,
}

pub const ALL_ACTIONS: [Action; ACTION_COUNT] = [
    Action::Warning,
    Action::Reiterating,
    Action::Forcing,
    Action::Observing,
];

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Warning => 0,
            Action::Reiterating => 1,
            Action::Forcing => 2,
            Action::Observing => 3,
        }
    }

    pub fn from_index(idx: usize) -> Action {
        ALL_ACTIONS[idx]
    }
}

/// Which one-shot interventions already ran this episode. Set once, never
/// cleared within an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeFlags {
    pub warning_done: bool,
    pub forcing_done: bool,
}

impl EpisodeFlags {
    pub fn already_executed(&self, action: Action) -> bool {
        match action {
            Action::Warning => self.warning_done,
            Action::Forcing => self.forcing_done,
            _ => false,
        }
    }

    fn mark(&mut self, action: Action) {
        match action {
            Action::Warning => self.warning_done = true,
            Action::Forcing => self.forcing_done = true,
            _ => {}
        }
    }
}

/// Inverse-observable bonus: low mean opinion and low influential-A share
/// mean the real news is winning, which earns a larger weight.
pub fn action_weight(gom: f64, mia: f64) -> f64 {
    1.0 / gom.max(AW_EPSILON) + 1.0 / mia.max(AW_EPSILON)
}

/// Cascade delta between consecutive decision points; negative is an
/// improvement.
pub fn action_result(gc_now: f64, gc_prev: f64) -> f64 {
    gc_now - gc_prev
}

/// Reward for the last action. Repeating Warning or Forcing within an
/// episode short-circuits to 0/1 depending on whether the cascade is past
/// one half; otherwise the base is 1 when the cascade did not grow, 0 when
/// it did, plus half the action weight, minus the cascade delta.
pub fn reward(ar: f64, aw: f64, action: Action, flags_before: &EpisodeFlags, gc: f64) -> f64 {
    if flags_before.already_executed(action) {
        return if gc > 0.5 { 0.0 } else { 1.0 };
    }
    let base = if ar <= 0.0 { 1.0 } else { 0.0 };
    (base + aw * 0.5) - ar
}

/// Epsilon-greedy selection; greedy ties break toward the lowest action
/// index. With epsilon 0 no randomness is consumed.
pub fn select_action(
    net: &QNetwork,
    obs: &Observation,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Action::from_index(rng.gen_range(0..ACTION_COUNT));
    }
    let q = net.forward(obs.as_array());
    let mut best = 0;
    for i in 1..ACTION_COUNT {
        if q[i] > q[best] {
            best = i;
        }
    }
    Action::from_index(best)
}

/// One step of experience.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_state: Observation,
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            cursor: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Sample `batch` transitions at distinct indices; requires
    /// `batch <= len`.
    pub fn sample(&self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
        rand::seq::index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| self.items[i])
            .collect()
    }
}

/// Bootstrap targets `r + gamma * max_a Q_target(s', a)`, masked on terminal
/// transitions.
pub fn td_targets(target_net: &QNetwork, batch: &[Transition], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.reward
            } else {
                let q = target_net.forward(t.next_state.as_array());
                let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.reward + gamma * best
            }
        })
        .collect()
}

/// Mean squared TD error of `net` against fixed targets.
pub fn td_loss(net: &QNetwork, batch: &[Transition], targets: &[f64]) -> f64 {
    let total: f64 = batch
        .iter()
        .zip(targets)
        .map(|(t, &y)| {
            let q = net.forward(t.state.as_array());
            (q[t.action.index()] - y).powi(2)
        })
        .sum();
    total / batch.len() as f64
}

/// Analytic gradient of `td_loss` with respect to every network parameter,
/// plus the loss itself.
pub fn td_gradients(net: &QNetwork, batch: &[Transition], targets: &[f64]) -> (Gradients, f64) {
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (t, &y) in batch.iter().zip(targets) {
        let activations = net.forward_trace(t.state.as_array());
        let q = activations.last().unwrap();
        let err = q[t.action.index()] - y;
        loss += err * err * scale;
        let mut d_output = [0.0; ACTION_COUNT];
        d_output[t.action.index()] = 2.0 * err * scale;
        net.backprop(t.state.as_array(), &activations, &d_output, &mut grads);
    }
    (grads, loss)
}

/// One optimization step: TD targets from the frozen target network, mean
/// squared error, one Adam update. Returns the pre-update loss.
pub fn train_step(
    net: &mut QNetwork,
    target_net: &QNetwork,
    opt: &mut Adam,
    batch: &[Transition],
    gamma: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let targets = td_targets(target_net, batch, gamma);
    let (grads, loss) = td_gradients(net, batch, &targets);
    opt.apply(net, &grads);
    debug_assert!(net.is_finite(), "network parameters left the finite range");
    Ok(loss)
}

/// A decision rule driving one episode.
pub trait SuperAgentPolicy {
    fn choose(&mut self, obs: &Observation) -> Action;
    fn on_transition(&mut self, _t: &Transition) {}
}

/// Greedy policy over a frozen network; used for evaluation sweeps.
pub struct GreedyPolicy<'a> {
    pub net: &'a QNetwork,
}

impl SuperAgentPolicy for GreedyPolicy<'_> {
    fn choose(&mut self, obs: &Observation) -> Action {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        select_action(self.net, obs, 0.0, &mut unused)
    }
}

/// Always plays the same action; `FixedPolicy(Action::Observing)` reproduces
/// an unsupervised run.
pub struct FixedPolicy(pub Action);

impl SuperAgentPolicy for FixedPolicy {
    fn choose(&mut self, _obs: &Observation) -> Action {
        self.0
    }
}

/// Ticks at which the supervisor wakes: every `sa_delay` ticks starting at
/// `sa_delay`, plus the final tick. It acts at every wake-up except the last
/// one, which only closes the trailing transition.
pub fn decision_ticks(total_ticks: u32, sa_delay: u32) -> Vec<u32> {
    let mut ticks: Vec<u32> = (1..=total_ticks / sa_delay).map(|j| j * sa_delay).collect();
    if total_ticks % sa_delay != 0 {
        ticks.push(total_ticks);
    }
    ticks
}

fn execute(sim: &mut Simulation, action: Action, flags: &mut EpisodeFlags) {
    let cfg = sim.config().clone();
    match action {
        Action::Warning => {
            if cfg.global_warning {
                sim.apply_global_warning();
            } else {
                let targets = sim.top_a_active(cfg.choose_method, cfg.node_range);
                sim.apply_warning(&targets);
            }
        }
        Action::Reiterating => {
            let targets = sim.top_a_active(cfg.choose_method, cfg.node_range);
            sim.apply_reiterate(&targets);
        }
        Action::Forcing => {
            sim.apply_forcing(cfg.choose_method, cfg.node_range_static_b);
        }
        Action::Observing => {}
    }
    flags.mark(action);
}

/// Drive one full episode under `policy`.
///
/// The agent wakes at every tick in `decision_ticks`. On wake-up it first
/// closes the pending transition: the reward compares the cascade between
/// the previous wake-up's observation and the current one, with the action
/// weight and the repeat check evaluated on the current state. It then picks
/// and executes the next action unless the run is over.
pub fn run_policy_episode(
    config: &SimConfig,
    policy: &mut dyn SuperAgentPolicy,
) -> Result<(RunRecord, Simulation)> {
    let mut sim = Simulation::new(config.clone())?;
    let total = config.total_ticks;
    let delay = config.sa_delay;
    let mut flags = EpisodeFlags::default();
    let mut trace = Vec::with_capacity(total as usize + 1);
    trace.push(metrics::global_cascade(&sim));
    let mut pending: Option<(Observation, Action, EpisodeFlags)> = None;

    while sim.ticks_elapsed() < total {
        let steps = delay.min(total - sim.ticks_elapsed());
        for _ in 0..steps {
            sim.tick();
            trace.push(metrics::global_cascade(&sim));
        }
        let obs = metrics::observe(&sim)?;
        if let Some((state, action, flags_before)) = pending.take() {
            let ar = action_result(obs.gc, state.gc);
            let aw = action_weight(obs.gom, obs.mia);
            let r = reward(ar, aw, action, &flags_before, obs.gc);
            let transition = Transition {
                state,
                action,
                reward: r,
                next_state: obs,
                terminal: sim.ticks_elapsed() == total,
            };
            policy.on_transition(&transition);
        }
        if sim.ticks_elapsed() < total {
            let action = policy.choose(&obs);
            let flags_before = flags;
            execute(&mut sim, action, &mut flags);
            pending = Some((obs, action, flags_before));
        }
    }

    let record = RunRecord {
        final_gc: *trace.last().unwrap(),
        gc_trace: trace,
        digest: ConfigDigest {
            theta: config.theta,
            p_n: config.p_n,
            p_o: config.p_o,
            sa_delay: Some(config.sa_delay),
            seed: config.seed,
        },
    };
    Ok((record, sim))
}

/// Run one episode under the frozen greedy policy.
pub fn evaluate_episode(config: &SimConfig, net: &QNetwork) -> Result<RunRecord> {
    let mut policy = GreedyPolicy { net };
    run_policy_episode(config, &mut policy).map(|(record, _)| record)
}

/// Learning policy: epsilon-greedy selection, replay storage, an
/// optimization step per stored transition once the buffer can fill a
/// batch, and periodic hard target syncs.
struct LearningPolicy<'a> {
    net: &'a mut QNetwork,
    target: &'a mut QNetwork,
    buffer: &'a mut ReplayBuffer,
    opt: &'a mut Adam,
    params: &'a TrainParams,
    epsilon: f64,
    rng: &'a mut ChaCha8Rng,
    train_steps: &'a mut u64,
    reward_sum: f64,
    transitions: u32,
}

impl SuperAgentPolicy for LearningPolicy<'_> {
    fn choose(&mut self, obs: &Observation) -> Action {
        select_action(self.net, obs, self.epsilon, self.rng)
    }

    fn on_transition(&mut self, t: &Transition) {
        self.reward_sum += t.reward;
        self.transitions += 1;
        self.buffer.push(*t);
        if self.buffer.len() >= self.params.batch_size {
            let batch = self.buffer.sample(self.params.batch_size, self.rng);
            train_step(self.net, self.target, self.opt, &batch, self.params.gamma)
                .expect("batch is non-empty");
            *self.train_steps += 1;
            if *self.train_steps % u64::from(self.params.target_sync_interval) == 0 {
                *self.target = self.net.clone();
            }
        }
    }
}

/// Per-episode training summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub final_gc: f64,
    pub mean_reward: f64,
    pub transitions: u32,
}

/// One learning episode over a fresh simulation.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    config: &SimConfig,
    net: &mut QNetwork,
    target: &mut QNetwork,
    buffer: &mut ReplayBuffer,
    opt: &mut Adam,
    params: &TrainParams,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    train_steps: &mut u64,
) -> Result<(RunRecord, EpisodeStats)> {
    let mut policy = LearningPolicy {
        net,
        target,
        buffer,
        opt,
        params,
        epsilon,
        rng,
        train_steps,
        reward_sum: 0.0,
        transitions: 0,
    };
    let (record, _) = run_policy_episode(config, &mut policy)?;
    let stats = EpisodeStats {
        final_gc: record.final_gc,
        mean_reward: if policy.transitions > 0 {
            policy.reward_sum / f64::from(policy.transitions)
        } else {
            0.0
        },
        transitions: policy.transitions,
    };
    Ok((record, stats))
}

/// Serialized training state; plain JSON so checkpoints stay inspectable,
/// with numbers round-tripping bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub network: QNetwork,
    pub optimizer: Adam,
    pub epsilon: f64,
    pub episodes_trained: u32,
    pub master_seed: u64,
    pub train_params: TrainParams,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        std::fs::write(path, body + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::CheckpointParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointParse {
                path: path.to_path_buf(),
                message: format!("unsupported format version {}", ckpt.format_version),
            });
        }
        if ckpt.layer_dims != LAYER_DIMS {
            return Err(Error::ArchitectureMismatch {
                expected: LAYER_DIMS.to_vec(),
                found: ckpt.layer_dims,
            });
        }
        ckpt.network.validate_shape()?;
        Ok(ckpt)
    }
}

/// Full training report: the final checkpoint plus per-episode statistics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    pub episode_rewards: Vec<f64>,
    pub episode_final_gc: Vec<f64>,
}

// Stream labels for seed derivation; part of the determinism contract.
const STREAM_INIT: u64 = 1;
const STREAM_EPISODE_SIM: u64 = 2;
const STREAM_EPISODE_SCHEDULE: u64 = 3;
const STREAM_EPISODE_AGENT: u64 = 4;

/// Grid the per-episode schedule samples from, covering the sweep space the
/// trained policy is evaluated on.
const TRAIN_P_N_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const TRAIN_SA_DELAYS: [u32; 3] = [5, 4, 2];

/// Train a fresh network for `config.training.episodes` episodes.
///
/// Each episode runs on an independent simulation seed; network polarization
/// and the action cadence are resampled per episode so the learned policy
/// sees the whole operating range. Epsilon decays multiplicatively per
/// episode. Deterministic in `master_seed`.
pub fn train(config: &SimConfig, master_seed: u64) -> Result<TrainReport> {
    config.validate()?;
    let params = config.training.clone();
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed::derive(master_seed, &[STREAM_INIT]));
    let mut net = QNetwork::random(&mut init_rng);
    let mut target = net.clone();
    let mut buffer = ReplayBuffer::new(params.replay_capacity);
    let mut opt = Adam::new(params.learning_rate, net.param_count());
    let mut epsilon = params.epsilon_start;
    let mut train_steps = 0u64;
    let mut episode_rewards = Vec::with_capacity(params.episodes as usize);
    let mut episode_final_gc = Vec::with_capacity(params.episodes as usize);

    for episode in 0..params.episodes {
        let ep = u64::from(episode);
        let mut schedule =
            ChaCha8Rng::seed_from_u64(seed::derive(master_seed, &[STREAM_EPISODE_SCHEDULE, ep]));
        let mut ep_config = config.clone();
        ep_config.seed = seed::derive(master_seed, &[STREAM_EPISODE_SIM, ep]);
        ep_config.p_n = TRAIN_P_N_GRID[schedule.gen_range(0..TRAIN_P_N_GRID.len())];
        ep_config.sa_delay = TRAIN_SA_DELAYS[schedule.gen_range(0..TRAIN_SA_DELAYS.len())];
        let mut agent_rng =
            ChaCha8Rng::seed_from_u64(seed::derive(master_seed, &[STREAM_EPISODE_AGENT, ep]));

        let (record, stats) = run_episode(
            &ep_config,
            &mut net,
            &mut target,
            &mut buffer,
            &mut opt,
            &params,
            epsilon,
            &mut agent_rng,
            &mut train_steps,
        )?;
        episode_rewards.push(stats.mean_reward);
        episode_final_gc.push(record.final_gc);
        epsilon = (epsilon * params.epsilon_decay).max(params.epsilon_end);

        if (episode + 1) % 50 == 0 {
            let window = &episode_rewards[episode_rewards.len().saturating_sub(50)..];
            let avg = window.iter().sum::<f64>() / window.len() as f64;
            log::info!(
                "episode {}/{}: epsilon {:.3}, mean reward (last 50) {:.3}",
                episode + 1,
                params.episodes,
                epsilon,
                avg
            );
        }
    }

    let checkpoint = Checkpoint {
        format_version: CHECKPOINT_VERSION,
        layer_dims: LAYER_DIMS.to_vec(),
        network: net,
        optimizer: opt,
        epsilon,
        episodes_trained: params.episodes,
        master_seed,
        train_params: params,
    };
    Ok(TrainReport {
        checkpoint,
        episode_rewards,
        episode_final_gc,
    })
}
