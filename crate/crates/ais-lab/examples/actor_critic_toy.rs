//! History-based actor-critic against the memoryless two-feature baseline
//! on the avoid-the-trap MDP: the recurrent agent closes in on the
//! optimum while the aliased baseline stays capped.
//!
//! Run with: cargo run --release --example actor_critic_toy

use ais_lab::cli::toy_aliasing_partition;
use ais_lab::mdp::{toy_mdp, value_iteration};
use ais_lab::train::{train_loop_tabular, TabularAgentKind, TrainConfig};

fn main() {
    let mdp = toy_mdp(100.0, 0.95);
    let vi = value_iteration(&mdp, 1e-10).unwrap();
    let optimal_mean: f64 = (0..3).map(|s| vi.v_star[s]).sum::<f64>() / 3.0;
    println!("optimal mean value over starts {{0,1,2}}: {optimal_mean:.3}");

    let config = TrainConfig {
        gamma: 0.95,
        iterations: 1600,
        episode_len: 48,
        feature_dim: 8,
        n_grad: 4,
        start_states: vec![0, 1, 2],
        ..Default::default()
    };
    let window = 100;
    for (name, kind) in [
        ("ais actor-critic (gru dim 8)", TabularAgentKind::AisActorCritic),
        (
            "memoryless baseline (2 features)",
            TabularAgentKind::Memoryless {
                partition: toy_aliasing_partition(),
            },
        ),
    ] {
        let mut finals = Vec::new();
        for seed in 0..3 {
            let rows = train_loop_tabular(&mdp, kind.clone(), &config, seed).unwrap();
            finals.push(
                rows[rows.len() - window..]
                    .iter()
                    .map(|r| r.mean_return)
                    .sum::<f64>()
                    / window as f64,
            );
        }
        finals.sort_by(|a, b| a.total_cmp(b));
        println!(
            "{name:<34} 3-seed final returns: median {:8.3}   (min {:8.3}, max {:8.3})",
            finals[1], finals[0], finals[2]
        );
    }
}
