//! Finite-feature AIS generators with exactly measurable error constants.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipm::{DiscreteDist, IpmChoice, KernelSpec, MetricSpec, PointSet};
use crate::mdp::TabularMdp;

/// Tabular AIS generator: a finite feature set with an init map, a total
/// recursive update table, and reward / transition heads.
///
/// `update[z][s_next][a]` gives the next feature, `reward_hat[z][a]` the
/// predicted reward, and `transition_hat[z][a]` the predicted next-state
/// distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularAisGenerator {
    pub n_features: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub init_feature: Vec<usize>,
    pub update: Vec<Vec<Vec<usize>>>,
    pub reward_hat: Vec<Vec<f64>>,
    pub transition_hat: Vec<Vec<Vec<f64>>>,
}

impl TabularAisGenerator {
    pub fn validate(&self) -> Result<()> {
        if self.init_feature.len() != self.n_states {
            return Err(Error::InvalidInput("init_feature must cover every state".into()));
        }
        for (s, &z) in self.init_feature.iter().enumerate() {
            if z >= self.n_features {
                return Err(Error::Closure(format!("init_feature({s}) = {z} outside feature set")));
            }
        }
        if self.update.len() != self.n_features {
            return Err(Error::InvalidInput("update table must cover every feature".into()));
        }
        for (z, per_state) in self.update.iter().enumerate() {
            if per_state.len() != self.n_states {
                return Err(Error::InvalidInput(format!("update[{z}] truncated")));
            }
            for row in per_state {
                if row.len() != self.n_actions {
                    return Err(Error::InvalidInput(format!("update[{z}] action row truncated")));
                }
                for &zn in row {
                    if zn >= self.n_features {
                        return Err(Error::Closure(format!("update maps outside feature set: {zn}")));
                    }
                }
            }
        }
        for (z, row) in self.reward_hat.iter().enumerate() {
            if row.len() != self.n_actions {
                return Err(Error::InvalidInput(format!("reward_hat[{z}] truncated")));
            }
        }
        for per_action in &self.transition_hat {
            for row in per_action {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < -1e-12) {
                    return Err(Error::InvalidInput("transition_hat row is not a distribution".into()));
                }
            }
        }
        Ok(())
    }

    /// Identity abstraction: features are the states themselves.
    pub fn identity(mdp: &TabularMdp) -> Self {
        let n = mdp.n_states;
        let update = (0..n)
            .map(|_| {
                (0..n)
                    .map(|sp| vec![sp; mdp.n_actions])
                    .collect::<Vec<_>>()
            })
            .collect();
        TabularAisGenerator {
            n_features: n,
            n_states: n,
            n_actions: mdp.n_actions,
            init_feature: (0..n).collect(),
            update,
            reward_hat: mdp.rewards.clone(),
            transition_hat: (0..n)
                .map(|s| {
                    (0..mdp.n_actions)
                        .map(|a| mdp.transition_row(s, a).to_vec())
                        .collect()
                })
                .collect(),
        }
    }

    #[inline]
    pub fn step(&self, z: usize, s_next: usize, a: usize) -> Result<usize> {
        if z >= self.n_features || s_next >= self.n_states || a >= self.n_actions {
            return Err(Error::Closure(format!("ais step out of range: z={z} s'={s_next} a={a}")));
        }
        Ok(self.update[z][s_next][a])
    }

    pub fn transition_dist(&self, z: usize, a: usize) -> DiscreteDist {
        DiscreteDist::new_unchecked(self.transition_hat[z][a].clone())
    }
}

/// Weights for class aggregation in [`quantizer_ais`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerWeights {
    /// Uniform average over the states of each class.
    Uniform,
    /// Half weight each on the states attaining the class reward minimum
    /// and maximum (per action); keeps the reward error at half the
    /// within-class span.
    RewardMidrange,
}

/// Build a memoryless quantizer abstraction from a state partition.
///
/// The update ignores the carried feature: `f(z, s', a) = partition(s')`,
/// and the heads aggregate the reward rows and transition rows of each
/// class.
pub fn quantizer_ais(
    mdp: &TabularMdp,
    partition: &[usize],
    weights: QuantizerWeights,
) -> Result<TabularAisGenerator> {
    if partition.len() != mdp.n_states {
        return Err(Error::InvalidInput("partition must cover every state".into()));
    }
    let n_features = partition.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n_features];
    for (s, &z) in partition.iter().enumerate() {
        classes[z].push(s);
    }
    if classes.iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidInput("partition has an empty class".into()));
    }

    let mut reward_hat = vec![vec![0.0; mdp.n_actions]; n_features];
    let mut transition_hat = vec![vec![vec![0.0; mdp.n_states]; mdp.n_actions]; n_features];
    for (z, members) in classes.iter().enumerate() {
        for a in 0..mdp.n_actions {
            match weights {
                QuantizerWeights::Uniform => {
                    let w = 1.0 / members.len() as f64;
                    for &s in members {
                        reward_hat[z][a] += w * mdp.reward(s, a);
                        for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                            transition_hat[z][a][sp] += w * p;
                        }
                    }
                }
                QuantizerWeights::RewardMidrange => {
                    let lo = members
                        .iter()
                        .copied()
                        .min_by(|&x, &y| mdp.reward(x, a).total_cmp(&mdp.reward(y, a)))
                        .unwrap();
                    let hi = members
                        .iter()
                        .copied()
                        .max_by(|&x, &y| mdp.reward(x, a).total_cmp(&mdp.reward(y, a)))
                        .unwrap();
                    reward_hat[z][a] = 0.5 * (mdp.reward(lo, a) + mdp.reward(hi, a));
                    for (sp, &p) in mdp.transition_row(lo, a).iter().enumerate() {
                        transition_hat[z][a][sp] += 0.5 * p;
                    }
                    for (sp, &p) in mdp.transition_row(hi, a).iter().enumerate() {
                        transition_hat[z][a][sp] += 0.5 * p;
                    }
                }
            }
        }
    }

    let update = (0..n_features)
        .map(|_| {
            (0..mdp.n_states)
                .map(|sp| vec![partition[sp]; mdp.n_actions])
                .collect::<Vec<_>>()
        })
        .collect();

    let gen = TabularAisGenerator {
        n_features,
        n_states: mdp.n_states,
        n_actions: mdp.n_actions,
        init_feature: partition.to_vec(),
        update,
        reward_hat,
        transition_hat,
    };
    gen.validate()?;
    Ok(gen)
}

/// Product-chain reachability: all `(state, feature)` pairs realizable from
/// the given start states under arbitrary action sequences.
pub fn reachable_pairs(
    mdp: &TabularMdp,
    gen: &TabularAisGenerator,
    starts: &[usize],
) -> Result<Vec<(usize, usize)>> {
    if starts.is_empty() {
        return Err(Error::InvalidInput("need at least one start state".into()));
    }
    let mut seen = BTreeSet::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &s in starts {
        let node = (s, gen.init_feature[s]);
        if seen.insert(node) {
            stack.push(node);
        }
    }
    while let Some((s, z)) = stack.pop() {
        for a in 0..mdp.n_actions {
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    let node = (sp, gen.step(z, sp, a)?);
                    if seen.insert(node) {
                        stack.push(node);
                    }
                }
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Exact `(epsilon, delta)` for a tabular generator: the worst reward and
/// transition mismatch over reachable `(state, feature)` pairs and all
/// actions, with the transition mismatch measured in the chosen IPM.
pub fn measure_eps_delta(
    mdp: &TabularMdp,
    gen: &TabularAisGenerator,
    starts: &[usize],
    ipm: IpmChoice,
    metric: &MetricSpec,
    kernel: &KernelSpec,
) -> Result<(f64, f64)> {
    gen.validate()?;
    let pairs = reachable_pairs(mdp, gen, starts)?;
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty reachable set".into()));
    }
    let points = PointSet::Ids(mdp.n_states);
    let mut eps = 0.0f64;
    let mut delta = 0.0f64;
    for &(s, z) in &pairs {
        for a in 0..mdp.n_actions {
            eps = eps.max((mdp.reward(s, a) - gen.reward_hat[z][a]).abs());
            let p = DiscreteDist::new_unchecked(mdp.transition_row(s, a).to_vec());
            let q = gen.transition_dist(z, a);
            let d = crate::ipm::ipm_distance(&p, &q, ipm, metric, kernel, &points)?;
            delta = delta.max(d);
        }
    }
    Ok((eps, delta))
}
