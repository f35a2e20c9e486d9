//! Sampled (epsilon, delta) probes for generators without exact tables.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NeuralAisGenerator, TabularAisGenerator};
use crate::error::{Error, Result};
use crate::ipm::{mmd_u_statistic, KernelSpec};
use crate::mdp::{sample_index, TabularMdp};

/// Anything that can play the generator role during a rollout: carry a
/// feature forward, predict rewards, and propose next-state distributions.
pub trait AisOracle {
    type State: Clone;

    fn init(&self, start_state: usize) -> Self::State;
    fn step(&self, state: &Self::State, s_next: usize, action: usize) -> Self::State;
    fn predict_reward(&self, state: &Self::State, action: usize) -> f64;
    fn next_state_dist(&self, state: &Self::State, action: usize) -> Vec<f64>;
}

impl AisOracle for TabularAisGenerator {
    type State = usize;

    fn init(&self, start_state: usize) -> usize {
        self.init_feature[start_state]
    }

    fn step(&self, state: &usize, s_next: usize, action: usize) -> usize {
        self.update[*state][s_next][action]
    }

    fn predict_reward(&self, state: &usize, action: usize) -> f64 {
        self.reward_hat[*state][action]
    }

    fn next_state_dist(&self, state: &usize, action: usize) -> Vec<f64> {
        self.transition_hat[*state][action].clone()
    }
}

impl AisOracle for NeuralAisGenerator {
    type State = Vec<f64>;

    fn init(&self, start_state: usize) -> Vec<f64> {
        self.step_values(&self.zero_feature(), start_state, None)
    }

    fn step(&self, state: &Vec<f64>, s_next: usize, action: usize) -> Vec<f64> {
        self.step_values(state, s_next, Some(action))
    }

    fn predict_reward(&self, state: &Vec<f64>, action: usize) -> f64 {
        let mut tape = crate::nn::Tape::new();
        let pvars = self.param_leaves(&mut tape);
        let z = tape.leaves(state);
        let r = self.reward_on_tape(&mut tape, &pvars, &z, action);
        tape.value(r)
    }

    fn next_state_dist(&self, state: &Vec<f64>, action: usize) -> Vec<f64> {
        let mut tape = crate::nn::Tape::new();
        let pvars = self.param_leaves(&mut tape);
        let z = tape.leaves(state);
        let logits = self.transition_logits_on_tape(&mut tape, &pvars, &z, action);
        let probs = tape.softmax(&logits);
        tape.values(&probs)
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalEpsDelta {
    pub eps_hat: f64,
    pub delta_hat: f64,
    /// Observation count per `(state, action)` bin that entered delta.
    pub bin_counts: Vec<((usize, usize), usize)>,
    pub bins_skipped: usize,
}

/// Roll the MDP under uniformly random actions and probe the generator's
/// reward / transition errors.
///
/// `eps_hat` is the largest reward-prediction error across visited steps.
/// `delta_hat` is the largest energy-distance U-statistic (square-rooted)
/// between one model draw per visit and the observed next states, binned
/// by `(state, action)`; bins with fewer than two observations are skipped
/// and counted. Rollout `k` uses a seed derived from `seed` and `k`, so a
/// longer run extends a shorter one.
pub fn measure_eps_delta_empirical<O: AisOracle>(
    mdp: &TabularMdp,
    oracle: &O,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<EmpiricalEpsDelta> {
    if n_rollouts == 0 {
        return Err(Error::InvalidInput("need at least one rollout".into()));
    }
    let mut eps_hat = 0.0f64;
    let mut observed: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
    let mut model: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
    let onehot = |s: usize| {
        let mut v = vec![0.0; mdp.n_states];
        v[s] = 1.0;
        v
    };
    for k in 0..n_rollouts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
        let mut s = rng.random_range(0..mdp.n_states);
        let mut z = oracle.init(s);
        for _ in 0..horizon {
            let a = rng.random_range(0..mdp.n_actions);
            let r = mdp.reward(s, a);
            let r_hat = oracle.predict_reward(&z, a);
            eps_hat = eps_hat.max((r - r_hat).abs());
            let s_next = sample_index(mdp.transition_row(s, a), &mut rng);
            let model_dist = oracle.next_state_dist(&z, a);
            let model_draw = sample_index(&model_dist, &mut rng);
            observed.entry((s, a)).or_default().push(onehot(s_next));
            model.entry((s, a)).or_default().push(onehot(model_draw));
            z = oracle.step(&z, s_next, a);
            s = s_next;
        }
    }
    let kernel = KernelSpec::Energy { exponent: 1.0 };
    let mut delta_hat = 0.0f64;
    let mut bin_counts = Vec::new();
    let mut skipped = 0usize;
    for (key, obs) in &observed {
        if obs.len() < 2 {
            skipped += 1;
            continue;
        }
        let mod_samples = &model[key];
        let u = mmd_u_statistic(obs, mod_samples, &kernel)?;
        delta_hat = delta_hat.max(u.max(0.0).sqrt());
        bin_counts.push((*key, obs.len()));
    }
    Ok(EmpiricalEpsDelta {
        eps_hat,
        delta_hat,
        bin_counts,
        bins_skipped: skipped,
    })
}
