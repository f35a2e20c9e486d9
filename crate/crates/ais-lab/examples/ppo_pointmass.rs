//! Clipped-surrogate training with a shared recurrent generator on the
//! one-dimensional point-mass environment.
//!
//! Run with: cargo run --release --example ppo_pointmass

use ais_lab::mdp::pointmass_env;
use ais_lab::train::{train_pointmass_ppo, TrainConfig};

fn main() {
    let env = pointmass_env(0.05, 0.5, 24);
    let config = TrainConfig {
        iterations: 150,
        episode_len: 24,
        feature_dim: 6,
        ppo_epochs: 4,
        ais_lr: 3e-3,
        actor_lr: 1e-2,
        critic_lr: 3e-3,
        gamma: 0.99,
        ..Default::default()
    };
    let rows = train_pointmass_ppo(&env, &config, 0).unwrap();
    println!("point mass toward goal 0.5, reward -(s - goal)^2");
    for chunk in rows.chunks(25) {
        let ret: f64 = chunk.iter().map(|r| r.mean_return).sum::<f64>() / chunk.len() as f64;
        let eps: f64 = chunk.iter().map(|r| r.eps_hat).sum::<f64>() / chunk.len() as f64;
        let rmse: f64 = chunk.iter().map(|r| r.delta_hat).sum::<f64>() / chunk.len() as f64;
        println!(
            "iters {:3}..{:3}  return {:8.3}   reward-pred err {:6.3}   next-state rmse {:6.3}",
            chunk[0].iteration,
            chunk.last().unwrap().iteration,
            ret,
            eps,
            rmse
        );
    }
}
