//! The policy-gradient estimator on a two-armed bandit where the exact
//! gradient has a closed form, then a full two-timescale training run.
//!
//! Run with: cargo run --release --example reinforce_bandit

use ais_lab::mdp::TabularMdp;
use ais_lab::nn::MlpShape;
use ais_lab::train::{reinforce_gradient, train_loop_tabular, TabularAgentKind, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // One state, two arms paying +1 and -0.5.
    let mdp = TabularMdp::new(
        1,
        2,
        0.9,
        vec![vec![vec![1.0]], vec![vec![1.0]]],
        vec![vec![1.0, -0.5]],
    )
    .unwrap();

    let actor = MlpShape::new(vec![1, 2]);
    let params = vec![0.3, -0.2, 0.1, 0.05];
    let logits: [f64; 2] = [params[0] + params[2], params[1] + params[3]];
    let z = logits[0].exp() + logits[1].exp();
    let pi = [logits[0].exp() / z, logits[1].exp() / z];
    let jbar = 1.0 * pi[0] - 0.5 * pi[1];
    let exact = [pi[0] * (1.0 - jbar), pi[1] * (-0.5 - jbar)];

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 50_000;
    let mut mean = [0.0f64; 4];
    for i in 0..n {
        let a = ais_lab::mdp::sample_index(&pi, &mut rng);
        let (g, _) = reinforce_gradient(
            &[vec![1.0]],
            &[a],
            &[mdp.reward(0, a)],
            0.9,
            &actor,
            &params,
        )
        .unwrap();
        for k in 0..4 {
            mean[k] += (g[k] - mean[k]) / (i + 1) as f64;
        }
    }
    println!("closed-form gradient (logits): [{:.5}, {:.5}]", exact[0], exact[1]);
    println!("monte-carlo estimate (W row) : [{:.5}, {:.5}]", mean[0], mean[1]);
    println!("monte-carlo estimate (biases): [{:.5}, {:.5}]", mean[2], mean[3]);

    // Train the generator + policy pair on the bandit.
    let config = TrainConfig {
        iterations: 500,
        episode_len: 1,
        feature_dim: 2,
        start_states: vec![0],
        ..Default::default()
    };
    let rows = train_loop_tabular(&mdp, TabularAgentKind::AisPolicyGradient, &config, 0).unwrap();
    let early: f64 = rows[..50].iter().map(|r| r.mean_return).sum::<f64>() / 50.0;
    let late: f64 = rows[450..].iter().map(|r| r.mean_return).sum::<f64>() / 50.0;
    println!("\ntraining mean reward: first 50 iters {early:.3}, last 50 iters {late:.3}");
    println!("(the good arm pays 1.0; a uniform policy averages 0.25)");
}
