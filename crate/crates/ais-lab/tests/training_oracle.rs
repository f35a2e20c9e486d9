//! Dynamic-programming oracle on a trained instance: after training a
//! small recurrent agent, quantize its learned feature space into a
//! tabular generator, solve that generator's dynamic program exactly, and
//! check the achieved return against the program's optimal value.

use std::collections::BTreeMap;

use ais_lab::ais::{NeuralAisGenerator, TabularAisGenerator};
use ais_lab::ais_dp::{feature_closure, solve_ais_dp};
use ais_lab::mdp::{toy_mdp, TabularMdp};
use ais_lab::nn::Tape;
use ais_lab::train::{train_loop_tabular, TabularAgentKind, TrainConfig};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: f64 = 0.25;

fn cell_of(z: &[f64]) -> Vec<i64> {
    z.iter().map(|v| (v / GRID).round() as i64).collect()
}

/// Quantize a trained generator into a tabular one by gridding the visited
/// feature vectors and reading the heads at each cell's representative.
fn quantize(
    gen: &NeuralAisGenerator,
    mdp: &TabularMdp,
    config: &TrainConfig,
    seed: u64,
) -> (TabularAisGenerator, Vec<usize>) {
    // Collect representatives: first visit wins, then close under the
    // recursive update until no new cell appears (capped).
    let mut cells: BTreeMap<Vec<i64>, (usize, Vec<f64>)> = BTreeMap::new();
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let intern = |z: Vec<f64>, cells: &mut BTreeMap<Vec<i64>, (usize, Vec<f64>)>,
                      reps: &mut Vec<Vec<f64>>| {
        let key = cell_of(&z);
        if let Some(&(id, _)) = cells.get(&key) {
            id
        } else {
            let id = reps.len();
            cells.insert(key, (id, z.clone()));
            reps.push(z);
            id
        }
    };

    let mut init_feature = vec![0usize; mdp.n_states];
    for s in 0..mdp.n_states {
        let z = gen.step_values(&gen.zero_feature(), s, None);
        init_feature[s] = intern(z, &mut cells, &mut reps);
    }
    // Seed with visited features from rollouts under a uniform policy.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..30 {
        let mut s = config.start_states[rng.random_range(0..config.start_states.len())];
        let mut z = gen.step_values(&gen.zero_feature(), s, None);
        intern(z.clone(), &mut cells, &mut reps);
        for _ in 0..config.episode_len {
            let a = rng.random_range(0..mdp.n_actions);
            let s_next = ais_lab::mdp::sample_index(mdp.transition_row(s, a), &mut rng);
            z = gen.step_values(&z, s_next, Some(a));
            intern(z.clone(), &mut cells, &mut reps);
            s = s_next;
        }
    }
    // Close under the update map.
    let cap = 4000;
    let mut frontier: Vec<usize> = (0..reps.len()).collect();
    while let Some(id) = frontier.pop() {
        if reps.len() > cap {
            break;
        }
        for sp in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let z = gen.step_values(&reps[id], sp, Some(a));
                let before = reps.len();
                let nid = intern(z, &mut cells, &mut reps);
                if nid == before {
                    frontier.push(nid);
                }
            }
        }
    }

    let n_features = reps.len();
    let mut update = vec![vec![vec![0usize; mdp.n_actions]; mdp.n_states]; n_features];
    let mut reward_hat = vec![vec![0.0; mdp.n_actions]; n_features];
    let mut transition_hat = vec![vec![vec![0.0; mdp.n_states]; mdp.n_actions]; n_features];
    for (id, rep) in reps.iter().enumerate().collect::<Vec<_>>() {
        let mut tape = Tape::new();
        let pvars = gen.param_leaves(&mut tape);
        let zv = tape.leaves(rep);
        for a in 0..mdp.n_actions {
            let r = gen.reward_on_tape(&mut tape, &pvars, &zv, a);
            reward_hat[id][a] = tape.value(r);
            let logits = gen.transition_logits_on_tape(&mut tape, &pvars, &zv, a);
            let probs = tape.softmax(&logits);
            transition_hat[id][a] = tape.values(&probs);
        }
        for sp in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let z = gen.step_values(rep, sp, Some(a));
                let key = cell_of(&z);
                // Unknown cells (outside the cap) fold into the nearest
                // representative by euclidean distance.
                update[id][sp][a] = match cells.get(&key) {
                    Some(&(nid, _)) => nid,
                    None => nearest(&reps, &z),
                };
            }
        }
    }
    let tab = TabularAisGenerator {
        n_features,
        n_states: mdp.n_states,
        n_actions: mdp.n_actions,
        init_feature: init_feature.clone(),
        update,
        reward_hat,
        transition_hat,
    };
    (tab, init_feature)
}

fn nearest(reps: &[Vec<f64>], z: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, r) in reps.iter().enumerate() {
        let d: f64 = r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[test]
fn trained_return_matches_the_dp_value_of_the_quantized_features() {
    let mdp = toy_mdp(100.0, 0.95);
    let config = TrainConfig {
        gamma: 0.95,
        iterations: 2000,
        episode_len: 48,
        feature_dim: 2,
        n_grad: 4,
        start_states: vec![0, 1, 2],
        ..Default::default()
    };
    let seed = 0u64;
    let rows = train_loop_tabular(&mdp, TabularAgentKind::AisActorCritic, &config, seed).unwrap();
    let window = 10;
    let mc: Vec<f64> = rows[rows.len() - window..]
        .iter()
        .map(|r| r.mean_return)
        .collect();
    let mc_mean = mc.iter().sum::<f64>() / window as f64;
    let mc_var = mc.iter().map(|v| (v - mc_mean) * (v - mc_mean)).sum::<f64>() / window as f64;
    let mc_se = (mc_var / window as f64).sqrt();

    let (_, agent) = ais_lab::train::train_loop_tabular_with_agent(
        &mdp,
        TabularAgentKind::AisActorCritic,
        &config,
        seed,
    )
    .unwrap();
    let agent_gen = agent.gen.expect("ais agent has a generator");

    let (tab, _) = quantize(&agent_gen, &mdp, &config, 99);
    tab.validate().unwrap();
    let starts: Vec<usize> = config.start_states.clone();
    let closure = feature_closure(&tab, &mdp, &starts).unwrap();
    let sol = solve_ais_dp(&tab, &mdp, &closure, 1e-10).unwrap();
    // Optimal abstraction value from the uniform start distribution,
    // truncated at the training horizon for comparability with episode
    // returns.
    let horizon_correction = 1.0 - 0.95f64.powi(config.episode_len as i32);
    let dp_value: f64 = starts
        .iter()
        .map(|&s| sol.value_of(tab.init_feature[s]).unwrap())
        .sum::<f64>()
        / starts.len() as f64
        * horizon_correction;

    // Within 5 percent (relative to the value scale) plus Monte-Carlo
    // noise of the 10-episode window.
    let scale = dp_value.abs().max(1.0);
    let tol = 0.05 * scale + 3.0 * mc_se;
    assert!(
        (mc_mean - dp_value).abs() <= tol,
        "final mean return {mc_mean:.3} vs DP value {dp_value:.3} (tol {tol:.3})"
    );
}
