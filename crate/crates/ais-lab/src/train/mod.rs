//! Policy-gradient and actor-critic training of (generator, policy) pairs
//! with multi-timescale schedules.

mod ppo;
mod schedule;

pub use ppo::{clip_surrogate, train_pointmass_ppo, ContinuousAisGenerator, PpoAgent, PpoBatch};
pub use schedule::{step_size, validate_schedule, ScheduleCheck, ScheduleMode, ScheduleReport};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ais::{ais_loss, AisConfig, LossIpm, NeuralAisGenerator};
use crate::error::{Error, Result};
use crate::ipm::{mmd_u_statistic, KernelSpec};
use crate::mdp::{sample_index, TabularMdp, Trajectory};
use crate::nn::{MlpShape, OptKind, Optimizer, Tape, Var};

/// Kernel choice for the continuous MMD transition loss. `Mean` is the
/// closed-form mean surrogate; the rest estimate the kernel MMD with two
/// reparameterised model draws per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MmdLossKernel {
    Mean,
    Energy,
    Gaussian { bandwidth: f64 },
    Laplace { scale: f64 },
}

/// Hyper-parameters of one training run. Defaults follow the reference
/// settings: Adam, step sizes 1.5e-3 / 3.5e-4 (generator / actor),
/// lambda 0.3, clip 0.2, 12 surrogate epochs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub ais_lr: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub episode_len: usize,
    pub ppo_epochs: usize,
    pub clip: f64,
    pub a_exp: f64,
    pub b_exp: f64,
    pub c_exp: f64,
    pub schedule_mode: ScheduleMode,
    pub optimizer: OptKind,
    pub iterations: usize,
    pub n_grad: usize,
    pub replay_episodes: usize,
    pub feature_dim: usize,
    pub ipm: LossIpm,
    /// Kernel backing the MMD transition loss on continuous environments.
    pub mmd_kernel: MmdLossKernel,
    /// Weight of the auxiliary AIS loss inside the clipped-surrogate
    /// objective.
    pub ais_loss_weight: f64,
    pub seeds: Vec<u64>,
    /// Start-state distribution for tabular rollouts (uniform over these).
    pub start_states: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ais_lr: 1.5e-3,
            actor_lr: 3.5e-4,
            critic_lr: 7e-4,
            lambda: 0.3,
            gamma: 0.99,
            batch_size: 512,
            episode_len: 64,
            ppo_epochs: 12,
            clip: 0.2,
            a_exp: 0.6,
            b_exp: 0.9,
            c_exp: 0.7,
            schedule_mode: ScheduleMode::Constant,
            optimizer: OptKind::Adam,
            iterations: 500,
            n_grad: 1,
            replay_episodes: 1,
            feature_dim: 8,
            ipm: LossIpm::Mmd,
            mmd_kernel: MmdLossKernel::Mean,
            ais_loss_weight: 1.0,
            seeds: (0..10).collect(),
            start_states: vec![0, 1, 2],
        }
    }
}

impl TrainConfig {
    /// Schedule validity for this configuration (three-timescale when a
    /// critic participates).
    pub fn validate_schedule(&self, with_critic: bool) -> ScheduleReport {
        validate_schedule(
            self.a_exp,
            self.b_exp,
            if with_critic { Some(self.c_exp) } else { None },
        )
    }
}

/// Episode store; batches never split an episode, so unrolled gradients
/// stay within recording boundaries.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    pub episodes: Vec<Trajectory>,
    pub max_episodes: usize,
}

impl ReplayBuffer {
    pub fn new(max_episodes: usize) -> Self {
        ReplayBuffer {
            episodes: Vec::new(),
            max_episodes: max_episodes.max(1),
        }
    }

    pub fn push(&mut self, episode: Trajectory) {
        if self.episodes.len() == self.max_episodes {
            self.episodes.remove(0);
        }
        self.episodes.push(episode);
    }

    /// Contiguous episode groups of at most `max_transitions` steps.
    pub fn batches(&self, max_transitions: usize) -> Vec<&[Trajectory]> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut acc = 0;
        for (i, ep) in self.episodes.iter().enumerate() {
            if acc > 0 && acc + ep.len() > max_transitions {
                out.push(&self.episodes[start..i]);
                start = i;
                acc = 0;
            }
            acc += ep.len();
        }
        if start < self.episodes.len() {
            out.push(&self.episodes[start..]);
        }
        out
    }
}

/// One metrics row per training iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMetricsRow {
    pub iteration: usize,
    pub mean_return: f64,
    pub ais_loss: f64,
    pub reward_loss: f64,
    pub transition_loss: f64,
    pub eps_hat: f64,
    pub delta_hat: f64,
    pub wallclock_ms: u64,
}

pub const METRICS_CSV_HEADER: &str =
    "iteration,mean_return,ais_loss,reward_loss,transition_loss,eps_hat,delta_hat,wallclock_ms";

impl TrainMetricsRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iteration,
            self.mean_return,
            self.ais_loss,
            self.reward_loss,
            self.transition_loss,
            self.eps_hat,
            self.delta_hat,
            self.wallclock_ms
        )
    }
}

/// Which tabular agent the loop trains.
#[derive(Debug, Clone)]
pub enum TabularAgentKind {
    /// Two-timescale generator + REINFORCE actor.
    AisPolicyGradient,
    /// Three-timescale generator + critic + actor.
    AisActorCritic,
    /// Memoryless baseline on a fixed state partition; no generator.
    Memoryless { partition: Vec<usize> },
}

/// The policy-gradient estimator over one recorded trajectory:
/// discounted rewards times cumulative scores,
/// `sum_t gamma^t r_t (sum_{tau<=t} grad log mu(a_tau | z_tau))`,
/// taken through the policy head only. Returns the ascent gradient and the
/// count of log-probabilities clipped at -30.
pub fn reinforce_gradient(
    features: &[Vec<f64>],
    actions: &[usize],
    rewards: &[f64],
    gamma: f64,
    actor: &MlpShape,
    actor_params: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let mut tape = Tape::new();
    let avars = tape.leaves(actor_params);
    let (logps, clipped) = action_log_probs(&mut tape, actor, &avars, features, actions)?;
    // Prefix sums of scores keep the node count linear in T.
    let mut terms = Vec::with_capacity(actions.len());
    let mut prefix: Option<Var> = None;
    let mut g = 1.0;
    for (t, lp) in logps.iter().enumerate() {
        prefix = Some(match prefix {
            None => *lp,
            Some(p) => tape.add(p, *lp),
        });
        terms.push(tape.scale(prefix.unwrap(), g * rewards[t]));
        g *= gamma;
    }
    let surrogate = tape.sum(&terms);
    let back = tape.backward(surrogate);
    Ok((back.grads(&avars), clipped))
}

/// Locally discounted reward-to-go weights,
/// `sum_tau grad log mu(a_tau|z_tau) * sum_{t>=tau} gamma^(t-tau) r_t`,
/// exposed for variance comparison with [`reinforce_gradient`].
pub fn reinforce_gradient_reward_to_go(
    features: &[Vec<f64>],
    actions: &[usize],
    rewards: &[f64],
    gamma: f64,
    actor: &MlpShape,
    actor_params: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let mut tape = Tape::new();
    let avars = tape.leaves(actor_params);
    let (logps, clipped) = action_log_probs(&mut tape, actor, &avars, features, actions)?;
    let mut togo = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        togo[t] = acc;
    }
    let terms: Vec<Var> = logps
        .iter()
        .zip(&togo)
        .map(|(&lp, &w)| tape.scale(lp, w))
        .collect();
    let surrogate = tape.sum(&terms);
    let back = tape.backward(surrogate);
    Ok((back.grads(&avars), clipped))
}

pub(crate) const LOG_CLIP: f64 = -30.0;

fn action_log_probs(
    tape: &mut Tape,
    actor: &MlpShape,
    actor_params: &[Var],
    features: &[Vec<f64>],
    actions: &[usize],
) -> Result<(Vec<Var>, usize)> {
    if features.len() < actions.len() {
        return Err(Error::InvalidInput("trajectory missing per-step features".into()));
    }
    let mut clipped = 0;
    let mut logps = Vec::with_capacity(actions.len());
    for (t, &a) in actions.iter().enumerate() {
        let z = tape.leaves(&features[t]);
        let logits = actor.forward(tape, actor_params, &z);
        let logp = tape.log_softmax(&logits);
        let lp = logp[a];
        if tape.value(lp) < LOG_CLIP {
            clipped += 1;
            logps.push(tape.leaf(LOG_CLIP));
        } else {
            logps.push(lp);
        }
    }
    Ok((logps, clipped))
}

/// Coupled two-timescale step: the generator descends the AIS loss at the
/// fast step size, the actor ascends the policy-gradient estimate at the
/// slow one.
pub struct TwoTimescale {
    pub ais_opt: Optimizer,
    pub actor_opt: Optimizer,
}

impl TwoTimescale {
    pub fn new(kind: OptKind, n_ais: usize, n_actor: usize) -> Self {
        TwoTimescale {
            ais_opt: Optimizer::new(kind, n_ais),
            actor_opt: Optimizer::new(kind, n_actor),
        }
    }

    pub fn step(
        &mut self,
        config: &TrainConfig,
        iteration: usize,
        ais_params: &mut [f64],
        ais_grad: &[f64],
        actor_params: &mut [f64],
        actor_ascent_grad: &[f64],
    ) -> Result<()> {
        let a_i = step_size(config.ais_lr, config.a_exp, iteration, config.schedule_mode);
        let b_i = step_size(config.actor_lr, config.b_exp, iteration, config.schedule_mode);
        self.ais_opt.step(ais_params, ais_grad, a_i)?;
        let neg: Vec<f64> = actor_ascent_grad.iter().map(|g| -g).collect();
        self.actor_opt.step(actor_params, &neg, b_i)?;
        Ok(())
    }
}

/// A tabular transition batch with expected targets, for exact critic
/// checks: each row weights a `(feature, reward, next feature dist)`
/// triple.
#[derive(Debug, Clone)]
pub struct ExpectedTdBatch {
    pub weights: Vec<f64>,
    pub features: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_features: Vec<Vec<(f64, Vec<f64>)>>,
}

/// TD loss `(1/N) sum_i w_i smoothL1(V(z_i) - r_i - gamma sum_j p_j V(z'_ij))`
/// and its gradient for a critic MLP.
pub fn expected_td_loss_grad(
    batch: &ExpectedTdBatch,
    gamma: f64,
    critic: &MlpShape,
    critic_params: &[f64],
) -> (f64, Vec<f64>) {
    let mut tape = Tape::new();
    let cvars = tape.leaves(critic_params);
    let mut terms = Vec::new();
    for i in 0..batch.features.len() {
        let z = tape.leaves(&batch.features[i]);
        let v = critic.forward(&mut tape, &cvars, &z)[0];
        let mut target_terms = Vec::new();
        for (p, znext) in &batch.next_features[i] {
            let zn = tape.leaves(znext);
            let vn = critic.forward(&mut tape, &cvars, &zn)[0];
            target_terms.push(tape.scale(vn, gamma * p));
        }
        let target = tape.sum(&target_terms);
        let diff = tape.sub(v, target);
        let td = tape.add_const(diff, -batch.rewards[i]);
        let loss_i = tape.smooth_l1(td);
        terms.push(tape.scale(loss_i, batch.weights[i]));
    }
    let total = tape.sum(&terms);
    let back = tape.backward(total);
    (tape.value(total), back.grads(&cvars))
}

struct RolloutRecord {
    traj: Trajectory,
    // z_t for t = 0..=T (memoryless: one-hot partition features)
    features: Vec<Vec<f64>>,
}

/// Tabular agent state: optional generator, actor head, critic head.
pub struct TabularAgent {
    pub kind: TabularAgentKind,
    pub gen: Option<NeuralAisGenerator>,
    pub actor: MlpShape,
    pub actor_params: Vec<f64>,
    pub critic: MlpShape,
    pub critic_params: Vec<f64>,
    ais_opt: Optimizer,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

impl TabularAgent {
    pub fn new(
        kind: TabularAgentKind,
        mdp: &TabularMdp,
        config: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let (gen, input_dim) = match &kind {
            TabularAgentKind::Memoryless { partition } => {
                let classes = partition.iter().copied().max().unwrap_or(0) + 1;
                (None, classes)
            }
            _ => {
                let gen = NeuralAisGenerator::tabular(
                    mdp.n_states,
                    mdp.n_actions,
                    config.feature_dim,
                    rng,
                );
                (Some(gen), config.feature_dim)
            }
        };
        let actor = MlpShape::new(vec![input_dim, 32, mdp.n_actions]);
        let actor_params = actor.init(rng);
        let critic = MlpShape::new(vec![input_dim, 32, 1]);
        let critic_params = critic.init(rng);
        let n_ais = gen.as_ref().map(|g| g.n_params()).unwrap_or(0);
        TabularAgent {
            ais_opt: Optimizer::new(config.optimizer, n_ais),
            actor_opt: Optimizer::new(config.optimizer, actor_params.len()),
            critic_opt: Optimizer::new(config.optimizer, critic_params.len()),
            kind,
            gen,
            actor,
            actor_params,
            critic,
            critic_params,
        }
    }

    fn rollout(&self, mdp: &TabularMdp, config: &TrainConfig, rng: &mut ChaCha8Rng) -> RolloutRecord {
        let start = config.start_states[rng.random_range(0..config.start_states.len())];
        let mut tape = Tape::new();
        let pvars = self.gen.as_ref().map(|g| g.param_leaves(&mut tape));
        let avars = tape.leaves(&self.actor_params);
        let mut traj = Trajectory::default();
        let mut features = Vec::with_capacity(config.episode_len + 1);
        let mut s = start;
        let mut prev_a: Option<usize> = None;
        let mut z_vars: Option<Vec<Var>> = None;
        traj.states.push(s);
        for _ in 0..config.episode_len {
            let feat_vals: Vec<f64> = match (&self.kind, &self.gen) {
                (TabularAgentKind::Memoryless { partition }, _) => {
                    let classes = partition.iter().copied().max().unwrap_or(0) + 1;
                    let mut f = vec![0.0; classes];
                    f[partition[s]] = 1.0;
                    f
                }
                (_, Some(gen)) => {
                    let prev = z_vars.take().unwrap_or_else(|| gen.zero_state_vars(&mut tape));
                    let z = gen.step_on_tape(&mut tape, pvars.as_ref().unwrap(), &prev, s, prev_a);
                    let vals = tape.values(&z);
                    z_vars = Some(z);
                    vals
                }
                _ => unreachable!("generator missing for an AIS agent"),
            };
            let zleaves = tape.leaves(&feat_vals);
            let logits = self.actor.forward(&mut tape, &avars, &zleaves);
            let probs_vars = tape.softmax(&logits);
            let probs = tape.values(&probs_vars);
            let a = sample_index(&probs, rng);
            let r = mdp.reward(s, a);
            let s_next = sample_index(mdp.transition_row(s, a), rng);
            features.push(feat_vals);
            traj.actions.push(a);
            traj.rewards.push(r);
            traj.states.push(s_next);
            prev_a = Some(a);
            s = s_next;
        }
        // Terminal feature for bootstrapped targets.
        let last = match (&self.kind, &self.gen) {
            (TabularAgentKind::Memoryless { partition }, _) => {
                let classes = partition.iter().copied().max().unwrap_or(0) + 1;
                let mut f = vec![0.0; classes];
                f[partition[s]] = 1.0;
                f
            }
            (_, Some(gen)) => {
                let prev = z_vars.take().unwrap();
                let z = gen.step_on_tape(&mut tape, pvars.as_ref().unwrap(), &prev, s, prev_a);
                tape.values(&z)
            }
            _ => unreachable!(),
        };
        features.push(last);
        traj.features = Some(features.clone());
        RolloutRecord { traj, features }
    }

    fn critic_values(&self, features: &[Vec<f64>]) -> Vec<f64> {
        let mut tape = Tape::new();
        let cvars = tape.leaves(&self.critic_params);
        features
            .iter()
            .map(|f| {
                let z = tape.leaves(f);
                let v = self.critic.forward(&mut tape, &cvars, &z);
                tape.value(v[0])
            })
            .collect()
    }

    /// Critic descent on the sampled TD loss (gradient through both value
    /// terms, matching the written loss).
    fn critic_step(&mut self, records: &[&RolloutRecord], gamma: f64, lr: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let cvars = tape.leaves(&self.critic_params);
        let mut terms = Vec::new();
        for rec in records {
            for t in 0..rec.traj.len() {
                let z = tape.leaves(&rec.features[t]);
                let v = self.critic.forward(&mut tape, &cvars, &z)[0];
                let zn = tape.leaves(&rec.features[t + 1]);
                let vn = self.critic.forward(&mut tape, &cvars, &zn)[0];
                let scaled = tape.scale(vn, -gamma);
                let diff = tape.add(v, scaled);
                let td = tape.add_const(diff, -rec.traj.rewards[t]);
                terms.push(tape.smooth_l1(td));
            }
        }
        let n: usize = records.iter().map(|r| r.traj.len()).sum();
        let sum = tape.sum(&terms);
        let loss = tape.scale(sum, 1.0 / n as f64);
        let back = tape.backward(loss);
        self.critic_opt.step(&mut self.critic_params, &back.grads(&cvars), lr)?;
        Ok(tape.value(loss))
    }

    /// Actor ascent on the critic-weighted score: each log-probability is
    /// weighted by the discounted reward-to-go minus the critic baseline,
    /// critic treated as a constant. Weights are standardised per update
    /// so the step size is insensitive to the reward scale.
    fn actor_step_critic_weighted(
        &mut self,
        records: &[&RolloutRecord],
        gamma: f64,
        lr: f64,
    ) -> Result<()> {
        let mut tape = Tape::new();
        let avars = tape.leaves(&self.actor_params);
        let mut weights = Vec::new();
        for rec in records {
            let values = self.critic_values(&rec.features);
            let mut acc = 0.0;
            let mut togo = vec![0.0; rec.traj.len()];
            for t in (0..rec.traj.len()).rev() {
                acc = rec.traj.rewards[t] + gamma * acc;
                togo[t] = acc;
            }
            for t in 0..rec.traj.len() {
                weights.push(togo[t] - values[t]);
            }
        }
        let n = weights.len();
        let mean = weights.iter().sum::<f64>() / n as f64;
        let var = weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n as f64;
        let scale = var.sqrt().max(1e-8);
        for w in weights.iter_mut() {
            *w = (*w - mean) / scale;
        }
        let mut terms = Vec::with_capacity(n);
        let mut idx = 0usize;
        for rec in records {
            for t in 0..rec.traj.len() {
                let z = tape.leaves(&rec.features[t]);
                let logits = self.actor.forward(&mut tape, &avars, &z);
                let logp = tape.log_softmax(&logits);
                let lp = if tape.value(logp[rec.traj.actions[t]]) < LOG_CLIP {
                    tape.leaf(LOG_CLIP)
                } else {
                    logp[rec.traj.actions[t]]
                };
                terms.push(tape.scale(lp, weights[idx]));
                idx += 1;
            }
        }
        let sum = tape.sum(&terms);
        let surrogate = tape.scale(sum, 1.0 / n as f64);
        let back = tape.backward(surrogate);
        let neg: Vec<f64> = back.grads(&avars).iter().map(|g| -g).collect();
        self.actor_opt.step(&mut self.actor_params, &neg, lr)?;
        Ok(())
    }

    /// One coupled three-timescale update on recorded episodes: generator
    /// descent on the AIS loss at `a_i`, critic descent on the TD loss at
    /// `c_i`, actor ascent on the critic-weighted score at `b_i`. The
    /// episodes must carry their per-step features.
    pub fn actor_critic_update(
        &mut self,
        episodes: &[Trajectory],
        config: &TrainConfig,
        iteration: usize,
    ) -> Result<()> {
        let a_i = step_size(config.ais_lr, config.a_exp, iteration, config.schedule_mode);
        let b_i = step_size(config.actor_lr, config.b_exp, iteration, config.schedule_mode);
        let c_i = step_size(config.critic_lr, config.c_exp, iteration, config.schedule_mode);
        self.ais_step(episodes, config, a_i)?;
        let records: Vec<RolloutRecord> = episodes
            .iter()
            .map(|traj| {
                let features = traj
                    .features
                    .clone()
                    .ok_or_else(|| Error::InvalidInput("episode missing features".into()))?;
                Ok(RolloutRecord {
                    traj: traj.clone(),
                    features,
                })
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&RolloutRecord> = records.iter().collect();
        self.critic_step(&refs, config.gamma, c_i)?;
        self.actor_step_critic_weighted(&refs, config.gamma, b_i)?;
        Ok(())
    }

    fn ais_step(&mut self, batch: &[Trajectory], config: &TrainConfig, lr: f64) -> Result<(f64, f64, f64)> {
        let Some(gen) = self.gen.as_mut() else {
            return Ok((0.0, 0.0, 0.0));
        };
        let ais_cfg = AisConfig::new(config.lambda, config.ipm, config.feature_dim, config.episode_len)?;
        let mut tape = Tape::new();
        let pvars = gen.param_leaves(&mut tape);
        let parts = ais_loss(&mut tape, gen, &pvars, batch, &ais_cfg)?;
        let back = tape.backward(parts.total);
        let grads = back.grads(&pvars);
        self.ais_opt.step(&mut gen.params, &grads, lr)?;
        Ok((
            tape.value(parts.total),
            parts.reward_value,
            parts.transition_value,
        ))
    }
}

/// Generator-error probes on one episode: the worst reward-prediction
/// error, and per-(state, action) energy U-statistics between one model
/// draw per visit and the observed next states.
fn episode_probes(
    agent: &TabularAgent,
    rec: &RolloutRecord,
    mdp: &TabularMdp,
    probe_seed: u64,
) -> (f64, f64) {
    let Some(gen) = agent.gen.as_ref() else {
        return (0.0, 0.0);
    };
    let mut tape = Tape::new();
    let pvars = gen.param_leaves(&mut tape);
    let mut eps_hat = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let mut observed: std::collections::BTreeMap<(usize, usize), Vec<Vec<f64>>> = Default::default();
    let mut model: std::collections::BTreeMap<(usize, usize), Vec<Vec<f64>>> = Default::default();
    let onehot = |s: usize| {
        let mut v = vec![0.0; mdp.n_states];
        v[s] = 1.0;
        v
    };
    for t in 0..rec.traj.len() {
        let z = tape.leaves(&rec.features[t]);
        let a = rec.traj.actions[t];
        let r_hat = gen.reward_on_tape(&mut tape, &pvars, &z, a);
        eps_hat = eps_hat.max((tape.value(r_hat) - rec.traj.rewards[t]).abs());
        let logits = gen.transition_logits_on_tape(&mut tape, &pvars, &z, a);
        let probs_vars = tape.softmax(&logits);
        let probs = tape.values(&probs_vars);
        let key = (rec.traj.states[t], a);
        observed.entry(key).or_default().push(onehot(rec.traj.states[t + 1]));
        model.entry(key).or_default().push(onehot(sample_index(&probs, &mut rng)));
    }
    let kernel = KernelSpec::Energy { exponent: 1.0 };
    let mut delta_hat = 0.0f64;
    for (key, obs) in &observed {
        if obs.len() < 2 {
            continue;
        }
        if let Ok(u) = mmd_u_statistic(obs, &model[key], &kernel) {
            delta_hat = delta_hat.max(u.max(0.0).sqrt());
        }
    }
    (eps_hat, delta_hat)
}

/// The training loop: rollout, buffer, per-batch gradient steps of the
/// generator / critic / actor at their schedule step sizes, one metrics
/// row per iteration. Deterministic per seed; the wallclock column is
/// pinned to zero so reruns are byte-identical.
pub fn train_loop_tabular(
    mdp: &TabularMdp,
    kind: TabularAgentKind,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<TrainMetricsRow>> {
    Ok(train_loop_tabular_with_agent(mdp, kind, config, seed)?.0)
}

/// [`train_loop_tabular`] variant that also hands back the trained agent.
pub fn train_loop_tabular_with_agent(
    mdp: &TabularMdp,
    kind: TabularAgentKind,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Vec<TrainMetricsRow>, TabularAgent)> {
    let with_critic = !matches!(kind, TabularAgentKind::AisPolicyGradient);
    if config.schedule_mode == ScheduleMode::PowerLaw {
        let report = config.validate_schedule(with_critic);
        if !report.is_valid() {
            let names: Vec<_> = report.failures().iter().map(|c| c.name.clone()).collect();
            return Err(Error::Schedule(names.join(", ")));
        }
    }
    if config.start_states.iter().any(|&s| s >= mdp.n_states) {
        return Err(Error::Config("start state outside the MDP".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = TabularAgent::new(kind, mdp, config, &mut rng);
    let mut buffer = ReplayBuffer::new(config.replay_episodes);
    let mut rows = Vec::with_capacity(config.iterations);
    let mut records: Vec<RolloutRecord> = Vec::new();

    for iter in 0..config.iterations {
        let rec = agent.rollout(mdp, config, &mut rng);
        let mean_return = rec.traj.discounted_return(config.gamma);
        buffer.push(rec.traj.clone());
        if records.len() == config.replay_episodes.max(1) {
            records.remove(0);
        }
        records.push(rec);

        let a_i = step_size(config.ais_lr, config.a_exp, iter, config.schedule_mode);
        let b_i = step_size(config.actor_lr, config.b_exp, iter, config.schedule_mode);
        let c_i = step_size(config.critic_lr, config.c_exp, iter, config.schedule_mode);

        let mut loss_parts = (0.0, 0.0, 0.0);
        for batch in buffer.batches(config.batch_size) {
            for _ in 0..config.n_grad {
                loss_parts = agent.ais_step(batch, config, a_i)?;
            }
        }
        let refs: Vec<&RolloutRecord> = records.iter().collect();
        match agent.kind {
            TabularAgentKind::AisPolicyGradient => {
                let rec = records.last().unwrap();
                let (grad, _clipped) = reinforce_gradient(
                    &rec.features,
                    &rec.traj.actions,
                    &rec.traj.rewards,
                    config.gamma,
                    &agent.actor,
                    &agent.actor_params,
                )?;
                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                agent.actor_opt.step(&mut agent.actor_params, &neg, b_i)?;
            }
            _ => {
                for _ in 0..config.n_grad {
                    agent.critic_step(&refs, config.gamma, c_i)?;
                    agent.actor_step_critic_weighted(&refs, config.gamma, b_i)?;
                }
            }
        }

        let (eps_hat, delta_hat) = episode_probes(
            &agent,
            records.last().unwrap(),
            mdp,
            seed ^ 0xa5a5_5a5a_0000_0000 ^ (iter as u64),
        );
        rows.push(TrainMetricsRow {
            iteration: iter,
            mean_return,
            ais_loss: loss_parts.0,
            reward_loss: loss_parts.1,
            transition_loss: loss_parts.2,
            eps_hat,
            delta_hat,
            wallclock_ms: 0,
        });
    }
    Ok((rows, agent))
}

/// Final greedy policy of a trained agent, for evaluation rollouts.
pub fn evaluate_mean_return(
    mdp: &TabularMdp,
    agent: &TabularAgent,
    config: &TrainConfig,
    n_episodes: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_episodes {
        let rec = agent.rollout(mdp, config, &mut rng);
        total += rec.traj.discounted_return(config.gamma);
    }
    total / n_episodes as f64
}
