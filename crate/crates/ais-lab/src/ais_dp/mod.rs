//! Dynamic programming over feature abstractions, flattened-policy gaps,
//! and machine-checked approximation bounds.

mod bounds;

pub use bounds::{
    bound_report, kappa, lipschitz_recursion, lipschitz_value_fixpoint, random_instance,
    run_bound_campaign, span_bound_check, BoundConfig, BoundReport, CampaignConfig,
    CampaignOutcome, Counterexample, BOUND_SLACK,
};

use std::collections::BTreeMap;

use crate::ais::{reachable_pairs, TabularAisGenerator};
use crate::error::{Error, Result};
use crate::mdp::{
    argmax_lowest, product_chain_value, value_iteration, StationaryPolicy, TabularMdp,
};

const CLOSURE_LIMIT: usize = 1_000_000;

/// Reachable feature set plus the product-chain reachability graph.
#[derive(Debug, Clone)]
pub struct FeatureClosure {
    /// Features reachable from the init features under the total update
    /// table, sorted ascending. The dynamic program runs on this set.
    pub features: Vec<usize>,
    /// `(state, feature)` pairs realizable from the start states under
    /// arbitrary actions and positive-probability transitions.
    pub pairs: Vec<(usize, usize)>,
}

/// Smallest feature set containing every init feature and closed under the
/// update table, plus the reachable product pairs.
pub fn feature_closure(
    gen: &TabularAisGenerator,
    mdp: &TabularMdp,
    starts: &[usize],
) -> Result<FeatureClosure> {
    gen.validate()?;
    let mut seen = vec![false; gen.n_features];
    let mut stack: Vec<usize> = Vec::new();
    for &s in starts {
        let z = gen.init_feature[s];
        if !seen[z] {
            seen[z] = true;
            stack.push(z);
        }
    }
    let mut count = stack.len();
    while let Some(z) = stack.pop() {
        for sp in 0..gen.n_states {
            for a in 0..gen.n_actions {
                let zn = gen.update[z][sp][a];
                if !seen[zn] {
                    seen[zn] = true;
                    count += 1;
                    if count > CLOSURE_LIMIT {
                        return Err(Error::SizeLimit(format!(
                            "feature closure exceeded {CLOSURE_LIMIT}"
                        )));
                    }
                    stack.push(zn);
                }
            }
        }
    }
    let features: Vec<usize> = (0..gen.n_features).filter(|&z| seen[z]).collect();
    let pairs = reachable_pairs(mdp, gen, starts)?;
    Ok(FeatureClosure { features, pairs })
}

/// Solution of the feature-space dynamic program.
#[derive(Debug, Clone)]
pub struct AisDpSolution {
    /// Features the program ran over, sorted ascending.
    pub features: Vec<usize>,
    feature_index: BTreeMap<usize, usize>,
    /// `q_hat[i][a]` for `features[i]`.
    pub q_hat: Vec<Vec<f64>>,
    /// `v_hat[i] = max_a q_hat[i][a]`.
    pub v_hat: Vec<f64>,
    /// Greedy feature policy, lowest-id tie-break; rows align with
    /// `features`.
    pub mu: StationaryPolicy,
    pub sweeps: usize,
}

impl AisDpSolution {
    pub fn value_of(&self, feature: usize) -> Option<f64> {
        self.feature_index.get(&feature).map(|&i| self.v_hat[i])
    }

    pub fn greedy_action(&self, feature: usize) -> Option<usize> {
        self.feature_index
            .get(&feature)
            .map(|&i| argmax_lowest(&self.q_hat[i]))
    }

    pub fn index_of(&self, feature: usize) -> Option<usize> {
        self.feature_index.get(&feature).copied()
    }
}

/// Value iteration on the feature MDP
/// `Q(z,a) = r_hat(z,a) + gamma * sum_s' P_hat(s'|z,a) V(f(z,s',a))`.
pub fn solve_ais_dp(
    gen: &TabularAisGenerator,
    mdp: &TabularMdp,
    closure: &FeatureClosure,
    tol: f64,
) -> Result<AisDpSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let features = closure.features.clone();
    let feature_index: BTreeMap<usize, usize> =
        features.iter().copied().enumerate().map(|(i, z)| (z, i)).collect();
    let nf = features.len();
    let gamma = mdp.gamma;

    let mut v = vec![0.0; nf];
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        let mut v_new = vec![f64::NEG_INFINITY; nf];
        for (i, &z) in features.iter().enumerate() {
            for a in 0..gen.n_actions {
                let mut q = gen.reward_hat[z][a];
                for (sp, &p) in gen.transition_hat[z][a].iter().enumerate() {
                    if p > 0.0 {
                        let zn = gen.update[z][sp][a];
                        q += gamma * p * v[feature_index[&zn]];
                    }
                }
                if q > v_new[i] {
                    v_new[i] = q;
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
            return Err(Error::InvalidInput("ais dp failed to converge".into()));
        }
    }

    let mut q_hat = vec![vec![0.0; gen.n_actions]; nf];
    let mut v_hat = vec![0.0; nf];
    let mut greedy = vec![0usize; nf];
    for (i, &z) in features.iter().enumerate() {
        for a in 0..gen.n_actions {
            let mut q = gen.reward_hat[z][a];
            for (sp, &p) in gen.transition_hat[z][a].iter().enumerate() {
                if p > 0.0 {
                    let zn = gen.update[z][sp][a];
                    q += gamma * p * v[feature_index[&zn]];
                }
            }
            q_hat[i][a] = q;
        }
        greedy[i] = argmax_lowest(&q_hat[i]);
        v_hat[i] = q_hat[i][greedy[i]];
    }
    Ok(AisDpSolution {
        features,
        feature_index,
        q_hat,
        v_hat,
        mu: StationaryPolicy::deterministic(&greedy, gen.n_actions),
        sweeps,
    })
}

/// Greedy feature policy lifted to the generator's full feature indexing,
/// for product-chain evaluation.
pub fn lift_mu(gen: &TabularAisGenerator, solution: &AisDpSolution) -> StationaryPolicy {
    let mut rows = vec![vec![0.0; gen.n_actions]; gen.n_features];
    for row in rows.iter_mut() {
        row[0] = 1.0;
    }
    for (i, &z) in solution.features.iter().enumerate() {
        rows[z] = solution.mu.action_probs[i].clone();
    }
    StationaryPolicy { action_probs: rows }
}

/// Worst difference between the optimal state value and the flattened
/// greedy policy's value over reachable `(state, feature)` pairs.
pub fn delta_gap(
    mdp: &TabularMdp,
    gen: &TabularAisGenerator,
    solution: &AisDpSolution,
    closure: &FeatureClosure,
    starts: &[usize],
) -> Result<f64> {
    let vi = value_iteration(mdp, 1e-12)?;
    let mu_full = lift_mu(gen, solution);
    let product = product_chain_value(mdp, gen, &mu_full, starts)?;
    let mut gap = 0.0f64;
    for &(s, z) in &closure.pairs {
        let vp = product
            .get(s, z)
            .ok_or_else(|| Error::InvalidInput(format!("unreached pair ({s},{z})")))?;
        gap = gap.max((vi.v_star[s] - vp).abs());
    }
    Ok(gap)
}

/// Feature-space Bellman residual of a solved program.
pub fn dp_residual(gen: &TabularAisGenerator, mdp: &TabularMdp, sol: &AisDpSolution) -> f64 {
    let mut worst = 0.0f64;
    for (i, &z) in sol.features.iter().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..gen.n_actions {
            let mut q = gen.reward_hat[z][a];
            for (sp, &p) in gen.transition_hat[z][a].iter().enumerate() {
                if p > 0.0 {
                    let zn = gen.update[z][sp][a];
                    q += mdp.gamma * p * sol.v_hat[sol.feature_index[&zn]];
                }
            }
            best = best.max(q);
        }
        worst = worst.max((best - sol.v_hat[i]).abs());
    }
    worst
}

#[cfg(test)]
mod tests;
