//! Exact evaluation of flattened history policies on the product chain.
//!
//! A recursively updatable abstraction makes `(S_t, Z_t)` a Markov chain
//! once the feature policy is fixed, so the history policy's value is the
//! solution of a finite linear system over reachable `(state, feature)`
//! pairs.

use std::collections::BTreeMap;

use crate::ais::{reachable_pairs, TabularAisGenerator};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mdp::{StationaryPolicy, TabularMdp};

/// Values of a flattened policy, keyed by reachable `(state, feature)`.
#[derive(Debug, Clone)]
pub struct ProductChainValue {
    pub nodes: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    index: BTreeMap<(usize, usize), usize>,
}

impl ProductChainValue {
    /// Value at `(state, feature)`, or `None` if the pair is unreachable.
    pub fn get(&self, state: usize, feature: usize) -> Option<f64> {
        self.index.get(&(state, feature)).map(|&i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }
}

/// Evaluate the history policy `mu ∘ phi` exactly at every reachable
/// `(state, feature)` pair. `mu` rows are indexed by feature id.
///
/// Reachability is taken under arbitrary action sequences so the result
/// covers every realizable history, not only those `mu` itself produces.
pub fn product_chain_value(
    mdp: &TabularMdp,
    gen: &TabularAisGenerator,
    mu: &StationaryPolicy,
    starts: &[usize],
) -> Result<ProductChainValue> {
    gen.validate()?;
    mu.validate(gen.n_features, mdp.n_actions)
        .map_err(|_| Error::InvalidInput("feature policy shape mismatch".into()))?;
    let nodes = reachable_pairs(mdp, gen, starts)?;
    let index: BTreeMap<(usize, usize), usize> = nodes
        .iter()
        .copied()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();

    let n = nodes.len();
    let mut a = Matrix::identity(n);
    let mut b = vec![0.0; n];
    for (i, &(s, z)) in nodes.iter().enumerate() {
        for (act, &pa) in mu.action_probs[z].iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            b[i] += pa * mdp.reward(s, act);
            for (sp, &p) in mdp.transition_row(s, act).iter().enumerate() {
                if p > 0.0 {
                    let zn = gen.update[z][sp][act];
                    let j = index[&(sp, zn)];
                    let cur = a.get(i, j);
                    a.set(i, j, cur - mdp.gamma * pa * p);
                }
            }
        }
    }
    let values = linalg::solve(&a, &b)?;
    Ok(ProductChainValue {
        nodes,
        values,
        index,
    })
}
