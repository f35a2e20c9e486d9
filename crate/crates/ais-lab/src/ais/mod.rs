//! AIS generators: history compressor, recursive update, reward head and
//! transition head, plus the lambda-weighted losses in each IPM variant.

mod empirical;
mod tabular;

pub use empirical::{measure_eps_delta_empirical, AisOracle, EmpiricalEpsDelta};
pub use tabular::{
    measure_eps_delta, quantizer_ais, reachable_pairs, QuantizerWeights, TabularAisGenerator,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Trajectory;
use crate::nn::{encode_state_action, GruShape, MlpShape, Tape, Var};

/// Which IPM backs the transition term of the AIS loss.
///
/// `Tv` stays available for bound reports; its loss surrogate is the L1
/// distance to the observed one-sample distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossIpm {
    Mmd,
    Kl,
    Tv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AisConfig {
    pub lambda: f64,
    pub ipm_variant: LossIpm,
    pub feature_dim: usize,
    pub rollout_len: usize,
}

impl AisConfig {
    pub fn new(lambda: f64, ipm_variant: LossIpm, feature_dim: usize, rollout_len: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidInput(format!("lambda {lambda} outside [0,1]")));
        }
        Ok(AisConfig {
            lambda,
            ipm_variant,
            feature_dim,
            rollout_len,
        })
    }
}

impl Default for AisConfig {
    fn default() -> Self {
        AisConfig {
            lambda: 0.3,
            ipm_variant: LossIpm::Mmd,
            feature_dim: 8,
            rollout_len: 64,
        }
    }
}

/// GRU compressor with MLP reward head and a categorical transition head
/// over tabular states. Parameters live in one flat vector:
/// `[gru | reward head | transition head]`.
#[derive(Debug, Clone)]
pub struct NeuralAisGenerator {
    pub n_states: usize,
    pub n_actions: usize,
    pub gru: GruShape,
    pub reward_head: MlpShape,
    pub transition_head: MlpShape,
    pub params: Vec<f64>,
}

impl NeuralAisGenerator {
    pub fn tabular(n_states: usize, n_actions: usize, feature_dim: usize, rng: &mut (impl rand::Rng + ?Sized)) -> Self {
        let gru = GruShape::new(n_states + n_actions, feature_dim);
        let reward_head = MlpShape::new(vec![feature_dim + n_actions, 16, 1]);
        let transition_head = MlpShape::new(vec![feature_dim + n_actions, n_states]);
        let mut params = gru.init(rng);
        params.extend(reward_head.init(rng));
        params.extend(transition_head.init(rng));
        NeuralAisGenerator {
            n_states,
            n_actions,
            gru,
            reward_head,
            transition_head,
            params,
        }
    }

    pub fn n_params(&self) -> usize {
        self.gru.n_params() + self.reward_head.n_params() + self.transition_head.n_params()
    }

    pub fn param_leaves(&self, tape: &mut Tape) -> Vec<Var> {
        tape.leaves(&self.params)
    }

    fn split<'v>(&self, pvars: &'v [Var]) -> (&'v [Var], &'v [Var], &'v [Var]) {
        let g = self.gru.n_params();
        let r = self.reward_head.n_params();
        (&pvars[..g], &pvars[g..g + r], &pvars[g + r..])
    }

    /// One recursive update `z' = f(z, s_next, a)` on an existing tape.
    pub fn step_on_tape(
        &self,
        tape: &mut Tape,
        pvars: &[Var],
        z: &[Var],
        s_next: usize,
        prev_action: Option<usize>,
    ) -> Vec<Var> {
        let (gru_p, _, _) = self.split(pvars);
        let x = encode_state_action(tape, self.n_states, self.n_actions, s_next, prev_action);
        self.gru.step(tape, gru_p, z, &x)
    }

    /// Value-level recursive update, for rollouts and probes.
    pub fn step_values(&self, z: &[f64], s_next: usize, prev_action: Option<usize>) -> Vec<f64> {
        let mut tape = Tape::new();
        let pvars = self.param_leaves(&mut tape);
        let zv = tape.leaves(z);
        let out = self.step_on_tape(&mut tape, &pvars, &zv, s_next, prev_action);
        tape.values(&out)
    }

    pub fn zero_feature(&self) -> Vec<f64> {
        vec![0.0; self.gru.hidden_dim]
    }

    pub fn zero_state_vars(&self, tape: &mut Tape) -> Vec<Var> {
        self.gru.zero_state(tape)
    }

    /// Parameters in the flat named-shape checkpoint format.
    pub fn to_checkpoint(&self) -> crate::nn::Checkpoint {
        let mut ck = crate::nn::Checkpoint::new();
        let g = self.gru.n_params();
        let r = self.reward_head.n_params();
        ck.push("compressor", vec![g], &self.params[..g]);
        ck.push("reward_head", vec![r], &self.params[g..g + r]);
        ck.push(
            "transition_head",
            vec![self.transition_head.n_params()],
            &self.params[g + r..],
        );
        ck
    }

    /// Restore parameters from a checkpoint written by [`Self::to_checkpoint`].
    pub fn load_checkpoint(&mut self, ck: &crate::nn::Checkpoint) -> Result<()> {
        let mut params = Vec::with_capacity(self.n_params());
        for name in ["compressor", "reward_head", "transition_head"] {
            let part = ck
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("checkpoint missing {name}")))?;
            params.extend_from_slice(part);
        }
        if params.len() != self.n_params() {
            return Err(Error::InvalidInput("checkpoint size mismatch".into()));
        }
        self.params = params;
        Ok(())
    }

    /// Feature sequence `z_0..z_T` for a trajectory: `z_t` conditions on
    /// `states[0..=t]` and `actions[0..t]`, starting from the zero hidden
    /// state with a blank initial action.
    pub fn features_on_tape(
        &self,
        tape: &mut Tape,
        pvars: &[Var],
        states: &[usize],
        actions: &[usize],
    ) -> Vec<Vec<Var>> {
        let (gru_p, _, _) = self.split(pvars);
        let mut z = self.gru.zero_state(tape);
        let mut out = Vec::with_capacity(states.len());
        for (t, &s) in states.iter().enumerate() {
            let prev = if t == 0 { None } else { Some(actions[t - 1]) };
            let x = encode_state_action(tape, self.n_states, self.n_actions, s, prev);
            z = self.gru.step(tape, gru_p, &z, &x);
            out.push(z.clone());
        }
        out
    }

    pub fn reward_on_tape(&self, tape: &mut Tape, pvars: &[Var], z: &[Var], action: usize) -> Var {
        let (_, rew_p, _) = self.split(pvars);
        let mut input = z.to_vec();
        let onehot = encode_action(tape, self.n_actions, action);
        input.extend(onehot);
        self.reward_head.forward(tape, rew_p, &input)[0]
    }

    /// Transition-head logits for `(z, a)`.
    pub fn transition_logits_on_tape(
        &self,
        tape: &mut Tape,
        pvars: &[Var],
        z: &[Var],
        action: usize,
    ) -> Vec<Var> {
        let (_, _, tr_p) = self.split(pvars);
        let mut input = z.to_vec();
        let onehot = encode_action(tape, self.n_actions, action);
        input.extend(onehot);
        self.transition_head.forward(tape, tr_p, &input)
    }
}

fn encode_action(tape: &mut Tape, n_actions: usize, action: usize) -> Vec<Var> {
    let mut enc = vec![0.0; n_actions];
    enc[action] = 1.0;
    tape.leaves(&enc)
}

/// Diagnostics of one loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct AisLossParts {
    pub total: Var,
    pub reward_value: f64,
    pub transition_value: f64,
    /// Number of log terms clipped at -30 in the KL variant.
    pub clipped_logs: usize,
}

const LOG_CLIP: f64 = -30.0;

/// Lambda-weighted AIS loss over tabular trajectories:
/// `(1/T) sum_t [ lambda (r_hat - r)^2 + (1 - lambda) L_P ]`
/// averaged across the batch, where `L_P` is the per-variant transition
/// surrogate. Minimise the returned node.
pub fn ais_loss(
    tape: &mut Tape,
    gen: &NeuralAisGenerator,
    pvars: &[Var],
    batch: &[Trajectory],
    config: &AisConfig,
) -> Result<AisLossParts> {
    if batch.is_empty() || batch.iter().any(|t| t.is_empty()) {
        return Err(Error::InvalidInput("empty batch in ais loss".into()));
    }
    let mut reward_terms: Vec<Var> = Vec::new();
    let mut transition_terms: Vec<Var> = Vec::new();
    let mut clipped = 0usize;
    let mut n_steps = 0usize;
    for traj in batch {
        let feats = gen.features_on_tape(tape, pvars, &traj.states, &traj.actions);
        for t in 0..traj.len() {
            n_steps += 1;
            let a = traj.actions[t];
            let s_next = traj.states[t + 1];
            let r_hat = gen.reward_on_tape(tape, pvars, &feats[t], a);
            let diff = tape.add_const(r_hat, -traj.rewards[t]);
            reward_terms.push(tape.sqr(diff));

            let logits = gen.transition_logits_on_tape(tape, pvars, &feats[t], a);
            let term = match config.ipm_variant {
                LossIpm::Mmd => {
                    // (m - 2 e_{s'})^T m with m the head's mean, which for a
                    // categorical head is the probability vector itself.
                    let probs = tape.softmax(&logits);
                    let sq: Vec<Var> = probs.iter().map(|&p| tape.sqr(p)).collect();
                    let sumsq = tape.sum(&sq);
                    let picked = tape.scale(probs[s_next], -2.0);
                    tape.add(sumsq, picked)
                }
                LossIpm::Kl => {
                    let logp = tape.log_softmax(&logits);
                    let lp = logp[s_next];
                    if tape.value(lp) < LOG_CLIP {
                        clipped += 1;
                        tape.leaf(-LOG_CLIP)
                    } else {
                        tape.neg(lp)
                    }
                }
                LossIpm::Tv => {
                    // L1 distance to the observed one-sample distribution:
                    // sum |p - e_{s'}| = 2 (1 - p_{s'}).
                    let probs = tape.softmax(&logits);
                    let picked = tape.scale(probs[s_next], -2.0);
                    tape.add_const(picked, 2.0)
                }
            };
            transition_terms.push(term);
        }
    }
    let inv = 1.0 / n_steps as f64;
    let rsum = tape.sum(&reward_terms);
    let rmean = tape.scale(rsum, inv);
    let tsum = tape.sum(&transition_terms);
    let tmean = tape.scale(tsum, inv);
    let rw = tape.scale(rmean, config.lambda);
    let tw = tape.scale(tmean, 1.0 - config.lambda);
    let total = tape.add(rw, tw);
    Ok(AisLossParts {
        total,
        reward_value: tape.value(rmean),
        transition_value: tape.value(tmean),
        clipped_logs: clipped,
    })
}

/// Loss evaluation for a tabular generator (no gradients): the same
/// lambda-weighted form with features advanced by the update table.
pub fn ais_loss_tabular_eval(
    gen: &TabularAisGenerator,
    batch: &[Trajectory],
    lambda: f64,
    variant: LossIpm,
) -> Result<f64> {
    if batch.is_empty() || batch.iter().any(|t| t.is_empty()) {
        return Err(Error::InvalidInput("empty batch in ais loss".into()));
    }
    let mut total = 0.0;
    let mut n_steps = 0usize;
    for traj in batch {
        let mut z = gen.init_feature[traj.states[0]];
        for t in 0..traj.len() {
            let a = traj.actions[t];
            let s_next = traj.states[t + 1];
            let r_err = gen.reward_hat[z][a] - traj.rewards[t];
            let row = &gen.transition_hat[z][a];
            let transition = match variant {
                LossIpm::Mmd => {
                    let sumsq: f64 = row.iter().map(|p| p * p).sum();
                    sumsq - 2.0 * row[s_next]
                }
                LossIpm::Kl => -row[s_next].max((LOG_CLIP).exp()).ln(),
                LossIpm::Tv => 2.0 * (1.0 - row[s_next]),
            };
            total += lambda * r_err * r_err + (1.0 - lambda) * transition;
            n_steps += 1;
            z = gen.update[z][s_next][a];
        }
    }
    Ok(total / n_steps as f64)
}
