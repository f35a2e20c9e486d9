//! Minimal reverse-mode engine and the network shapes the AIS generator
//! and policies are built from.

mod layers;
mod optim;
mod tape;

pub use layers::{
    encode_continuous, encode_state_action, gaussian_log_prob, GruShape, MlpShape,
};
pub use optim::{Checkpoint, ManifestEntry, OptKind, Optimizer};
pub use tape::{smooth_l1, Backward, Tape, Var};

/// Central finite differences of a scalar function, h = 1e-6.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    let mut grad = vec![0.0; at.len()];
    let mut x = at.to_vec();
    for i in 0..at.len() {
        x[i] = at[i] + h;
        let fp = f(&x);
        x[i] = at[i] - h;
        let fm = f(&x);
        x[i] = at[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Largest relative mismatch between analytic and finite-difference
/// gradients, with an absolute floor for near-zero entries.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}
