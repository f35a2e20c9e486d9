//! Clipped-surrogate policy optimization with a shared recurrent
//! generator on continuous toy environments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{step_size, LossIpm, MmdLossKernel, TrainConfig, TrainMetricsRow, LOG_CLIP};
use crate::error::{Error, Result};
use crate::mdp::{standard_normal, ContinuousEnv};
use crate::nn::{encode_continuous, gaussian_log_prob, GruShape, MlpShape, Optimizer, Tape, Var};

/// GRU compressor over `(state, previous action)` vectors with an MLP
/// reward head and a Gaussian-mean transition head, for continuous
/// environments.
#[derive(Debug, Clone)]
pub struct ContinuousAisGenerator {
    pub state_dim: usize,
    pub action_dim: usize,
    pub gru: GruShape,
    pub reward_head: MlpShape,
    pub mean_head: MlpShape,
    pub params: Vec<f64>,
}

impl ContinuousAisGenerator {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        feature_dim: usize,
        rng: &mut (impl rand::Rng + ?Sized),
    ) -> Self {
        let gru = GruShape::new(state_dim + action_dim, feature_dim);
        let reward_head = MlpShape::new(vec![feature_dim + action_dim, 16, 1]);
        let mean_head = MlpShape::new(vec![feature_dim + action_dim, 16, state_dim]);
        let mut params = gru.init(rng);
        params.extend(reward_head.init(rng));
        params.extend(mean_head.init(rng));
        ContinuousAisGenerator {
            state_dim,
            action_dim,
            gru,
            reward_head,
            mean_head,
            params,
        }
    }

    pub fn n_params(&self) -> usize {
        self.gru.n_params() + self.reward_head.n_params() + self.mean_head.n_params()
    }

    fn split<'v>(&self, pvars: &'v [Var]) -> (&'v [Var], &'v [Var], &'v [Var]) {
        let g = self.gru.n_params();
        let r = self.reward_head.n_params();
        (&pvars[..g], &pvars[g..g + r], &pvars[g + r..])
    }

    pub fn step_on_tape(
        &self,
        tape: &mut Tape,
        pvars: &[Var],
        z: &[Var],
        state: &[f64],
        prev_action: Option<&[f64]>,
    ) -> Vec<Var> {
        let (gru_p, _, _) = self.split(pvars);
        let x = encode_continuous(tape, state, self.action_dim, prev_action);
        self.gru.step(tape, gru_p, z, &x)
    }

    pub fn reward_on_tape(&self, tape: &mut Tape, pvars: &[Var], z: &[Var], action: &[f64]) -> Var {
        let (_, rp, _) = self.split(pvars);
        let mut input = z.to_vec();
        input.extend(tape.leaves(action));
        self.reward_head.forward(tape, rp, &input)[0]
    }

    pub fn mean_on_tape(&self, tape: &mut Tape, pvars: &[Var], z: &[Var], action: &[f64]) -> Vec<Var> {
        let (_, _, mp) = self.split(pvars);
        let mut input = z.to_vec();
        input.extend(tape.leaves(action));
        self.mean_head.forward(tape, mp, &input)
    }
}

/// One recorded on-policy batch: everything the surrogate epochs need.
#[derive(Debug, Clone)]
pub struct PpoBatch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    pub old_log_probs: Vec<f64>,
    /// Discounted Monte-Carlo returns.
    pub returns: Vec<f64>,
    /// `returns - critic baseline`, frozen at collection time.
    pub advantages: Vec<f64>,
    /// Two frozen standard-normal draws per step, reparameterising the
    /// model samples of kernel-MMD losses.
    pub noise: Vec<[Vec<f64>; 2]>,
}

/// `min(ratio * A, clip(ratio) * A)`: flat (zero-gradient) whenever the
/// clipped branch is active.
pub fn clip_surrogate(tape: &mut Tape, ratio: Var, advantage: f64, clip: f64) -> Var {
    let r = tape.value(ratio);
    let clipped = r.clamp(1.0 - clip, 1.0 + clip);
    let unclipped_wins = r * advantage <= clipped * advantage + 1e-15;
    if unclipped_wins {
        tape.scale(ratio, advantage)
    } else {
        tape.leaf(clipped * advantage)
    }
}

/// Agent for continuous control: shared generator, Gaussian actor with a
/// learnable shared log-std, critic.
pub struct PpoAgent {
    pub gen: ContinuousAisGenerator,
    pub actor: MlpShape,
    pub actor_params: Vec<f64>,
    pub log_std: Vec<f64>,
    pub critic: MlpShape,
    pub critic_params: Vec<f64>,
    gen_opt: Optimizer,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

impl PpoAgent {
    pub fn new(env: &dyn ContinuousEnv, action_dim: usize, config: &TrainConfig, rng: &mut ChaCha8Rng) -> Self {
        let gen = ContinuousAisGenerator::new(env.state_dim(), action_dim, config.feature_dim, rng);
        let actor = MlpShape::new(vec![config.feature_dim, 32, action_dim]);
        let actor_params = actor.init(rng);
        let critic = MlpShape::new(vec![config.feature_dim, 32, 1]);
        let critic_params = critic.init(rng);
        let n_actor = actor_params.len() + action_dim;
        PpoAgent {
            gen_opt: Optimizer::new(config.optimizer, gen.n_params()),
            actor_opt: Optimizer::new(config.optimizer, n_actor),
            critic_opt: Optimizer::new(config.optimizer, critic_params.len()),
            gen,
            actor,
            actor_params,
            log_std: vec![0.0; action_dim],
            critic,
            critic_params,
        }
    }

    /// Features `z_0..z_{T-1}` over a recorded episode, on the caller's
    /// tape so gradients flow through the compressor.
    fn features_on_tape(&self, tape: &mut Tape, pvars: &[Var], batch: &PpoBatch) -> Vec<Vec<Var>> {
        let mut z = self.gen.gru.zero_state(tape);
        let mut out = Vec::with_capacity(batch.states.len());
        for t in 0..batch.states.len() {
            let prev = if t == 0 {
                None
            } else {
                Some(batch.actions[t - 1].as_slice())
            };
            z = self.gen.step_on_tape(tape, pvars, &z, &batch.states[t], prev);
            out.push(z.clone());
        }
        out
    }

    fn rollout(&self, env: &dyn ContinuousEnv, config: &TrainConfig, rng: &mut ChaCha8Rng) -> PpoBatch {
        let mut tape = Tape::new();
        let pvars = tape.leaves(&self.gen.params);
        let avars = tape.leaves(&self.actor_params);
        let cvars = tape.leaves(&self.critic_params);
        let mut s = env.start(rng);
        let mut prev_a: Option<Vec<f64>> = None;
        let mut z = self.gen.gru.zero_state(&mut tape);
        let mut batch = PpoBatch {
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            old_log_probs: Vec::new(),
            returns: Vec::new(),
            advantages: Vec::new(),
            noise: Vec::new(),
        };
        let mut values = Vec::new();
        for _ in 0..env.horizon().min(config.episode_len) {
            z = self
                .gen
                .step_on_tape(&mut tape, &pvars, &z, &s, prev_a.as_deref());
            let mean = self.actor.forward(&mut tape, &avars, &z);
            let action: Vec<f64> = mean
                .iter()
                .zip(&self.log_std)
                .map(|(&m, &ls)| tape.value(m) + ls.exp() * standard_normal(rng))
                .collect();
            let logp = {
                let lp = gaussian_log_prob(&mut tape, &mean, self.log_std[0], &action);
                tape.value(lp)
            };
            let v = {
                let out = self.critic.forward(&mut tape, &cvars, &z);
                tape.value(out[0])
            };
            let (s_next, r) = env.step(&s, &action, rng);
            batch.states.push(s.clone());
            batch.actions.push(action);
            batch.rewards.push(r);
            batch.next_states.push(s_next.clone());
            batch.old_log_probs.push(logp);
            let dim = env.state_dim();
            batch.noise.push([
                (0..dim).map(|_| standard_normal(rng)).collect(),
                (0..dim).map(|_| standard_normal(rng)).collect(),
            ]);
            values.push(v);
            prev_a = Some(batch.actions.last().unwrap().clone());
            s = s_next;
        }
        let mut acc = 0.0;
        batch.returns = vec![0.0; batch.rewards.len()];
        for t in (0..batch.rewards.len()).rev() {
            acc = batch.rewards[t] + config.gamma * acc;
            batch.returns[t] = acc;
        }
        batch.advantages = batch
            .returns
            .iter()
            .zip(&values)
            .map(|(g, v)| g - v)
            .collect();
        batch
    }

    /// One full-batch surrogate epoch; returns (surrogate, value loss,
    /// ais loss) values.
    pub fn epoch_step(
        &mut self,
        batch: &PpoBatch,
        config: &TrainConfig,
        iteration: usize,
    ) -> Result<(f64, f64, f64)> {
        let mut tape = Tape::new();
        let pvars = tape.leaves(&self.gen.params);
        let avars = tape.leaves(&self.actor_params);
        let lvars = tape.leaves(&self.log_std);
        let cvars = tape.leaves(&self.critic_params);
        let feats = self.features_on_tape(&mut tape, &pvars, batch);
        let t_len = batch.states.len();

        let mut surrogate_terms = Vec::with_capacity(t_len);
        let mut value_terms = Vec::with_capacity(t_len);
        let mut reward_terms = Vec::with_capacity(t_len);
        let mut transition_terms = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let mean = self.actor.forward(&mut tape, &avars, &feats[t]);
            let logp = gaussian_log_prob_learned(&mut tape, &mean, &lvars, &batch.actions[t]);
            // Log-space ratio guard.
            let diff = tape.add_const(logp, -batch.old_log_probs[t]);
            let diff = clamp_value(&mut tape, diff, -20.0, 20.0);
            let ratio = tape.exp(diff);
            surrogate_terms.push(clip_surrogate(&mut tape, ratio, batch.advantages[t], config.clip));

            let v = self.critic.forward(&mut tape, &cvars, &feats[t])[0];
            let verr = tape.add_const(v, -batch.returns[t]);
            value_terms.push(tape.smooth_l1(verr));

            let r_hat = self.gen.reward_on_tape(&mut tape, &pvars, &feats[t], &batch.actions[t]);
            let rdiff = tape.add_const(r_hat, -batch.rewards[t]);
            reward_terms.push(tape.sqr(rdiff));
            let m = self.gen.mean_on_tape(&mut tape, &pvars, &feats[t], &batch.actions[t]);
            let term = match config.ipm {
                LossIpm::Kl => {
                    let lp = gaussian_log_prob(&mut tape, &m, 0.0, &batch.next_states[t]);
                    if tape.value(lp) < LOG_CLIP {
                        tape.leaf(-LOG_CLIP)
                    } else {
                        tape.neg(lp)
                    }
                }
                _ => transition_mmd_term(
                    &mut tape,
                    &m,
                    &batch.next_states[t],
                    &batch.noise[t],
                    config.mmd_kernel,
                ),
            };
            transition_terms.push(term);
        }
        let inv = 1.0 / t_len as f64;
        let surr_sum = tape.sum(&surrogate_terms);
        let surrogate = tape.scale(surr_sum, inv);
        let val_sum = tape.sum(&value_terms);
        let value_loss = tape.scale(val_sum, inv);
        let rew_sum = tape.sum(&reward_terms);
        let rew_mean = tape.scale(rew_sum, inv);
        let tr_sum = tape.sum(&transition_terms);
        let tr_mean = tape.scale(tr_sum, inv);
        let rw = tape.scale(rew_mean, config.lambda);
        let tw = tape.scale(tr_mean, 1.0 - config.lambda);
        let ais = tape.add(rw, tw);

        let neg_surr = tape.neg(surrogate);
        let half_val = tape.scale(value_loss, 0.5);
        let ais_w = tape.scale(ais, config.ais_loss_weight);
        let partial = tape.add(neg_surr, half_val);
        let total = tape.add(partial, ais_w);

        let back = tape.backward(total);
        let a_i = step_size(config.ais_lr, config.a_exp, iteration, config.schedule_mode);
        let b_i = step_size(config.actor_lr, config.b_exp, iteration, config.schedule_mode);
        let c_i = step_size(config.critic_lr, config.c_exp, iteration, config.schedule_mode);
        self.gen_opt.step(&mut self.gen.params, &back.grads(&pvars), a_i)?;
        let mut actor_all = self.actor_params.clone();
        actor_all.extend_from_slice(&self.log_std);
        let mut actor_grads = back.grads(&avars);
        actor_grads.extend(back.grads(&lvars));
        self.actor_opt.step(&mut actor_all, &actor_grads, b_i)?;
        let na = self.actor_params.len();
        self.actor_params.copy_from_slice(&actor_all[..na]);
        self.log_std.copy_from_slice(&actor_all[na..]);
        self.critic_opt.step(&mut self.critic_params, &back.grads(&cvars), c_i)?;
        Ok((tape.value(surrogate), tape.value(value_loss), tape.value(ais)))
    }
}

fn clamp_value(tape: &mut Tape, v: Var, lo: f64, hi: f64) -> Var {
    let x = tape.value(v);
    if x < lo {
        tape.leaf(lo)
    } else if x > hi {
        tape.leaf(hi)
    } else {
        v
    }
}

/// Gaussian log-density with per-dimension learnable log-std vars.
fn gaussian_log_prob_learned(tape: &mut Tape, mean: &[Var], log_std: &[Var], x: &[f64]) -> Var {
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let terms: Vec<Var> = mean
        .iter()
        .zip(log_std)
        .zip(x)
        .map(|((&m, &ls), &xi)| {
            let sigma_inv = {
                let neg = tape.neg(ls);
                tape.exp(neg)
            };
            let shifted = tape.add_const(m, -xi);
            let scaled = tape.mul(shifted, sigma_inv);
            let sq = tape.sqr(scaled);
            let half = tape.scale(sq, -0.5);
            let with_ls = tape.sub(half, ls);
            tape.add_const(with_ls, -half_ln_2pi)
        })
        .collect();
    tape.sum(&terms)
}


/// Euclidean distance between taped vectors, guarded at zero.
fn tape_distance(tape: &mut Tape, a: &[Var], b: &[Var]) -> Var {
    let sq: Vec<Var> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = tape.sub(x, y);
            tape.sqr(d)
        })
        .collect();
    let total = tape.sum(&sq);
    tape.sqrt_guarded(total)
}

fn tape_sq_distance(tape: &mut Tape, a: &[Var], b: &[Var]) -> Var {
    let sq: Vec<Var> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = tape.sub(x, y);
            tape.sqr(d)
        })
        .collect();
    tape.sum(&sq)
}

/// Model-dependent part of the squared kernel MMD between the model
/// `N(m, I)` and the observed sample `x`, with two reparameterised draws
/// `w_i = m + eps_i`:
/// `k(w1, w2) - k(x, w1) - k(x, w2)` (energy kernels reduce to the
/// anchor-free distance form).
fn transition_mmd_term(
    tape: &mut Tape,
    m: &[Var],
    x: &[f64],
    noise: &[Vec<f64>; 2],
    kernel: MmdLossKernel,
) -> Var {
    match kernel {
        MmdLossKernel::Mean => {
            let prods: Vec<Var> = m
                .iter()
                .zip(x)
                .map(|(&mi, &xi)| {
                    let shifted = tape.add_const(mi, -2.0 * xi);
                    tape.mul(shifted, mi)
                })
                .collect();
            tape.sum(&prods)
        }
        _ => {
            let xv = tape.leaves(x);
            let w1: Vec<Var> = m
                .iter()
                .zip(&noise[0])
                .map(|(&mi, &e)| tape.add_const(mi, e))
                .collect();
            let w2: Vec<Var> = m
                .iter()
                .zip(&noise[1])
                .map(|(&mi, &e)| tape.add_const(mi, e))
                .collect();
            match kernel {
                MmdLossKernel::Energy => {
                    let dx1 = tape_distance(tape, &xv, &w1);
                    let dx2 = tape_distance(tape, &xv, &w2);
                    let dww = tape_distance(tape, &w1, &w2);
                    let a = tape.scale(dx1, 0.5);
                    let b = tape.scale(dx2, 0.5);
                    let c = tape.scale(dww, -0.5);
                    let ab = tape.add(a, b);
                    tape.add(ab, c)
                }
                MmdLossKernel::Gaussian { bandwidth } => {
                    let k = |tape: &mut Tape, a: &[Var], b: &[Var]| {
                        let sq = tape_sq_distance(tape, a, b);
                        let scaled = tape.scale(sq, -1.0 / (2.0 * bandwidth * bandwidth));
                        tape.exp(scaled)
                    };
                    let kww = k(tape, &w1, &w2);
                    let kx1 = k(tape, &xv, &w1);
                    let kx2 = k(tape, &xv, &w2);
                    let neg = tape.add(kx1, kx2);
                    tape.sub(kww, neg)
                }
                MmdLossKernel::Laplace { scale } => {
                    let k = |tape: &mut Tape, a: &[Var], b: &[Var]| {
                        let d = tape_distance(tape, a, b);
                        let scaled = tape.scale(d, -1.0 / scale);
                        tape.exp(scaled)
                    };
                    let kww = k(tape, &w1, &w2);
                    let kx1 = k(tape, &xv, &w1);
                    let kx2 = k(tape, &xv, &w2);
                    let neg = tape.add(kx1, kx2);
                    tape.sub(kww, neg)
                }
                MmdLossKernel::Mean => unreachable!(),
            }
        }
    }
}

/// Clipped-surrogate training on a continuous environment; 12 surrogate
/// epochs per collected batch by default, metrics row per iteration.
pub fn train_pointmass_ppo(
    env: &dyn ContinuousEnv,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<TrainMetricsRow>> {
    if config.episode_len == 0 {
        return Err(Error::Config("episode_len must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = PpoAgent::new(env, 1, config, &mut rng);
    let mut rows = Vec::with_capacity(config.iterations);
    for iter in 0..config.iterations {
        let batch = agent.rollout(env, config, &mut rng);
        let mut ret = 0.0;
        let mut g = 1.0;
        for &r in &batch.rewards {
            ret += g * r;
            g *= config.gamma;
        }
        let mut stats = (0.0, 0.0, 0.0);
        for _ in 0..config.ppo_epochs {
            stats = agent.epoch_step(&batch, config, iter)?;
        }
        // Probes: reward-prediction error and next-state RMSE of the mean
        // head, on the recorded batch.
        let (eps_hat, delta_hat) = {
            let mut tape = Tape::new();
            let pvars = tape.leaves(&agent.gen.params);
            let feats = agent.features_on_tape(&mut tape, &pvars, &batch);
            let mut eps = 0.0f64;
            let mut sq = 0.0;
            for t in 0..batch.states.len() {
                let r_hat = agent
                    .gen
                    .reward_on_tape(&mut tape, &pvars, &feats[t], &batch.actions[t]);
                eps = eps.max((tape.value(r_hat) - batch.rewards[t]).abs());
                let m = agent
                    .gen
                    .mean_on_tape(&mut tape, &pvars, &feats[t], &batch.actions[t]);
                let mv = tape.values(&m);
                sq += mv
                    .iter()
                    .zip(&batch.next_states[t])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            (eps, (sq / batch.states.len() as f64).sqrt())
        };
        rows.push(TrainMetricsRow {
            iteration: iter,
            mean_return: ret,
            ais_loss: stats.2,
            reward_loss: 0.0,
            transition_loss: 0.0,
            eps_hat,
            delta_hat,
            wallclock_ms: 0,
        });
    }
    Ok(rows)
}
