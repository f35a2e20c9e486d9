//! Continuous toy environments.

use rand::{Rng, RngExt};

/// Episodic continuous-state environment with caller-owned rng state.
pub trait ContinuousEnv {
    fn state_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    fn start(&self, rng: &mut dyn Rng) -> Vec<f64>;
    /// Pure function of `(state, action, rng draw)`.
    fn step(&self, state: &[f64], action: &[f64], rng: &mut dyn Rng) -> (Vec<f64>, f64);
}

/// One-dimensional point mass: `s' = s + 0.1 a + w`, `r = -(s - goal)^2`,
/// actions clipped to `[-1, 1]`, start uniform on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct PointmassEnv {
    pub noise_std: f64,
    pub goal: f64,
    pub horizon: usize,
}

pub fn pointmass_env(noise_std: f64, goal: f64, horizon: usize) -> PointmassEnv {
    assert!(noise_std >= 0.0, "noise_std must be nonnegative");
    PointmassEnv {
        noise_std,
        goal,
        horizon,
    }
}

/// Standard normal draw via Box-Muller; consumes two uniforms.
pub fn standard_normal(rng: &mut dyn Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl ContinuousEnv for PointmassEnv {
    fn state_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn start(&self, rng: &mut dyn Rng) -> Vec<f64> {
        vec![rng.random_range(-1.0..1.0)]
    }

    fn step(&self, state: &[f64], action: &[f64], rng: &mut dyn Rng) -> (Vec<f64>, f64) {
        let s = state[0];
        let a = action[0].clamp(-1.0, 1.0);
        let w = if self.noise_std > 0.0 {
            self.noise_std * standard_normal(rng)
        } else {
            0.0
        };
        let next = s + 0.1 * a + w;
        let reward = -(s - self.goal) * (s - self.goal);
        (vec![next], reward)
    }
}
