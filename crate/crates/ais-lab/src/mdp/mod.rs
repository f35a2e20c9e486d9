//! Finite MDPs, exact Bellman oracles, and trajectory sampling.

mod codebook;
mod env;
mod product;

pub use codebook::{codebook_fsm_policy, CodebookFsmPolicy};
pub use env::{pointmass_env, standard_normal, ContinuousEnv, PointmassEnv};
pub use product::{product_chain_value, ProductChainValue};

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const DIST_TOL: f64 = 1e-12;

/// Finite MDP with exact transition tables.
///
/// `transitions[a][s]` is the distribution over next states after taking
/// action `a` in state `s`; `rewards[s][a]` is the per-step reward.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mdp = TabularMdp {
            n_states,
            n_actions,
            gamma,
            transitions,
            rewards,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidInput("need at least one state and action".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidInput(format!("gamma {} outside (0,1)", self.gamma)));
        }
        if self.transitions.len() != self.n_actions || self.rewards.len() != self.n_states {
            return Err(Error::InvalidInput("table shapes do not match counts".into()));
        }
        for (a, per_state) in self.transitions.iter().enumerate() {
            if per_state.len() != self.n_states {
                return Err(Error::InvalidInput(format!("action {a} transition table truncated")));
            }
            for (s, row) in per_state.iter().enumerate() {
                check_distribution_row(row, self.n_states, &format!("P(.|s={s},a={a})"))?;
            }
        }
        for (s, row) in self.rewards.iter().enumerate() {
            if row.len() != self.n_actions {
                return Err(Error::InvalidInput(format!("reward row {s} truncated")));
            }
            for (a, r) in row.iter().enumerate() {
                if !r.is_finite() {
                    return Err(Error::NonFinite(format!("reward r({s},{a})")));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        &self.transitions[action][state]
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state][action]
    }

    pub fn reward_span(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.rewards {
            for &r in row {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        hi - lo
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

fn check_distribution_row(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(Error::InvalidInput(format!("{what}: wrong length")));
    }
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidInput(format!("{what}: negative or non-finite entry")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidInput(format!("{what}: row sums to {sum}, not 1")));
    }
    Ok(())
}

/// Memoryless randomised policy: one action distribution per state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryPolicy {
    pub action_probs: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn new(action_probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in action_probs.iter().enumerate() {
            check_distribution_row(row, row.len(), &format!("policy row {s}"))?;
        }
        Ok(StationaryPolicy { action_probs })
    }

    /// Deterministic policy from an action index per state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let action_probs = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        StationaryPolicy { action_probs }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        StationaryPolicy {
            action_probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    /// Greedy action per state, resolving ties toward the lowest id.
    pub fn greedy_actions(&self) -> Vec<usize> {
        self.action_probs
            .iter()
            .map(|row| argmax_lowest(row))
            .collect()
    }

    pub fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.action_probs.len() != n_states {
            return Err(Error::InvalidInput("policy state count mismatch".into()));
        }
        for (s, row) in self.action_probs.iter().enumerate() {
            check_distribution_row(row, n_actions, &format!("policy row {s}"))?;
        }
        Ok(())
    }
}

/// Index of the maximum entry, lowest index on ties (within 0 slack:
/// strict `>` comparison keeps the earliest maximum).
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// History-dependent policy driven by a per-policy memory record.
///
/// `step` must be deterministic given its inputs; `act` rows are
/// distributions over actions.
pub trait HistoryPolicy {
    type Memory: Clone;

    fn init(&self, start_state: usize) -> Self::Memory;
    fn step(&self, memory: &Self::Memory, prev_action: usize, new_state: usize) -> Result<Self::Memory>;
    fn act(&self, memory: &Self::Memory) -> Vec<f64>;
}

impl HistoryPolicy for StationaryPolicy {
    type Memory = usize;

    fn init(&self, start_state: usize) -> usize {
        start_state
    }

    fn step(&self, _memory: &usize, _prev_action: usize, new_state: usize) -> Result<usize> {
        Ok(new_state)
    }

    fn act(&self, memory: &usize) -> Vec<f64> {
        self.action_probs[*memory].clone()
    }
}

/// Rollout record aligned as `states[t], actions[t], rewards[t], states[t+1]`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub features: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut acc = 0.0;
        let mut g = 1.0;
        for &r in &self.rewards {
            acc += g * r;
            g *= gamma;
        }
        acc
    }

    /// CSV with columns `t,state,action,reward`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,state,action,reward\n");
        for t in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t, self.states[t], self.actions[t], self.rewards[t]
            ));
        }
        out
    }
}

pub fn sample_index(probs: &[f64], rng: &mut (impl Rng + ?Sized)) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Sample a length-`horizon` trajectory; deterministic given the rng state.
pub fn sample_trajectory<P: HistoryPolicy>(
    mdp: &TabularMdp,
    policy: &P,
    start_state: usize,
    horizon: usize,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let mut traj = Trajectory::default();
    let mut state = start_state;
    let mut mem = policy.init(state);
    traj.states.push(state);
    for _ in 0..horizon {
        let probs = policy.act(&mem);
        let action = sample_index(&probs, rng);
        let reward = mdp.reward(state, action);
        let next = sample_index(mdp.transition_row(state, action), rng);
        traj.actions.push(action);
        traj.rewards.push(reward);
        traj.states.push(next);
        mem = policy.step(&mem, action, next)?;
        state = next;
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct ValueIterationResult {
    pub v_star: Vec<f64>,
    pub q_star: Vec<Vec<f64>>,
    pub pi_star: StationaryPolicy,
    pub sweeps: usize,
}

/// Value iteration to `||Tv - v||_inf <= tol`; greedy policy breaks ties
/// toward the lowest action id.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ValueIterationResult> {
    mdp.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let n = mdp.n_states;
    let mut v = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut v_new = vec![f64::NEG_INFINITY; n];
        for s in 0..n {
            for a in 0..mdp.n_actions {
                let mut q = mdp.reward(s, a);
                let row = mdp.transition_row(s, a);
                for (sp, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        q += mdp.gamma * p * v[sp];
                    }
                }
                if q > v_new[s] {
                    v_new[s] = q;
                }
            }
        }
        let diff = v
            .iter()
            .zip(&v_new)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = v_new;
        if diff <= tol {
            break;
        }
        if sweeps > 10_000_000 {
            return Err(Error::InvalidInput("value iteration failed to converge".into()));
        }
    }
    // One more backup for a consistent (q, greedy) pair; the returned v
    // satisfies ||Tv - v|| <= gamma * tol <= tol.
    let mut q_star = vec![vec![0.0; mdp.n_actions]; n];
    let mut v_star = vec![0.0; n];
    let mut greedy = vec![0usize; n];
    for s in 0..n {
        for a in 0..mdp.n_actions {
            let mut q = mdp.reward(s, a);
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    q += mdp.gamma * p * v[sp];
                }
            }
            q_star[s][a] = q;
        }
        greedy[s] = argmax_lowest(&q_star[s]);
        v_star[s] = q_star[s][greedy[s]];
    }
    Ok(ValueIterationResult {
        v_star,
        q_star,
        pi_star: StationaryPolicy::deterministic(&greedy, mdp.n_actions),
        sweeps,
    })
}

/// Bellman optimality residual `||Tv - v||_inf` of a candidate value vector.
pub fn bellman_residual(mdp: &TabularMdp, v: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..mdp.n_states {
        let mut best = f64::NEG_INFINITY;
        for a in 0..mdp.n_actions {
            let mut q = mdp.reward(s, a);
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                q += mdp.gamma * p * v[sp];
            }
            best = best.max(q);
        }
        worst = worst.max((best - v[s]).abs());
    }
    worst
}

/// Exact policy evaluation by solving `(I - gamma * P_pi) v = r_pi`.
pub fn policy_value(mdp: &TabularMdp, policy: &StationaryPolicy) -> Result<Vec<f64>> {
    mdp.validate()?;
    policy.validate(mdp.n_states, mdp.n_actions)?;
    let n = mdp.n_states;
    let mut a = Matrix::identity(n);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for (act, &pa) in policy.action_probs[s].iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            b[s] += pa * mdp.reward(s, act);
            for (sp, &p) in mdp.transition_row(s, act).iter().enumerate() {
                let cur = a.get(s, sp);
                a.set(s, sp, cur - mdp.gamma * pa * p);
            }
        }
    }
    let v = linalg::solve(&a, &b)?;
    let res = linalg::max_abs(&linalg::residual(&a, &v, &b));
    if res > 1e-10 * (1.0 + linalg::max_abs(&b)) {
        return Err(Error::NonFinite(format!("policy evaluation residual {res}")));
    }
    Ok(v)
}

/// The four-state avoid-the-trap MDP: forward / backward / bidirectional
/// cycle actions, each edge with probability one half, and rewards
/// `(-1, -1, 1, -K)`.
pub fn toy_mdp(k: f64, gamma: f64) -> TabularMdp {
    assert!(k > 0.0, "K must be positive");
    let n = 4;
    let mut transitions = vec![vec![vec![0.0; n]; n]; 3];
    for s in 0..n {
        let fwd = (s + 1) % n;
        let back = (s + n - 1) % n;
        // action 0: forward cycle or stay
        transitions[0][s][fwd] += 0.5;
        transitions[0][s][s] += 0.5;
        // action 1: backward cycle or stay
        transitions[1][s][back] += 0.5;
        transitions[1][s][s] += 0.5;
        // action 2: forward or backward
        transitions[2][s][fwd] += 0.5;
        transitions[2][s][back] += 0.5;
    }
    let state_rewards = [-1.0, -1.0, 1.0, -k];
    let rewards = (0..n).map(|s| vec![state_rewards[s]; 3]).collect();
    TabularMdp::new(n, 3, gamma, transitions, rewards).expect("toy mdp is valid")
}

/// Random MDP with Dirichlet(1) transition rows and uniform rewards.
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    seed: u64,
    reward_range: (f64, f64),
) -> TabularMdp {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = vec![vec![vec![0.0; n_states]; n_states]; n_actions];
    for per_state in transitions.iter_mut() {
        for row in per_state.iter_mut() {
            // Dirichlet(1) row: normalised unit exponentials.
            let mut sum = 0.0;
            for p in row.iter_mut() {
                let u: f64 = rng.random();
                *p = -(1.0 - u).ln();
                sum += *p;
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
            // Re-normalise exactly so the row sum is 1 to machine precision.
            let s: f64 = row.iter().sum();
            for p in row.iter_mut() {
                *p /= s;
            }
        }
    }
    let (lo, hi) = reward_range;
    let rewards = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.random_range(lo..hi)).collect())
        .collect();
    TabularMdp::new(n_states, n_actions, 0.9, transitions, rewards).expect("random mdp is valid")
}
