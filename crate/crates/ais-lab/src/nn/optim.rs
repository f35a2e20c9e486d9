//! First-order optimizers over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptKind {
    Sgd,
    Adam,
}

/// Optimizer state; Adam uses beta = (0.9, 0.999), eps = 1e-8.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptKind, n_params: usize) -> Self {
        Optimizer {
            kind,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Descent step. Non-finite gradients reject the whole step.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::InvalidInput("parameter/gradient length mismatch".into()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient entry in optimizer step".into()));
        }
        match self.kind {
            OptKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptKind::Adam => {
                const BETA1: f64 = 0.9;
                const BETA2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.t += 1;
                let bc1 = 1.0 - BETA1.powi(self.t as i32);
                let bc2 = 1.0 - BETA2.powi(self.t as i32);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p -= lr * mhat / (vhat.sqrt() + EPS);
                }
            }
        }
        Ok(())
    }
}

/// Named-shape manifest plus a flat value array; the checkpoint format for
/// learned parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub manifest: Vec<ManifestEntry>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint {
            manifest: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, shape: Vec<usize>, values: &[f64]) {
        assert_eq!(shape.iter().product::<usize>(), values.len());
        self.manifest.push(ManifestEntry {
            name: name.to_string(),
            shape,
        });
        self.values.extend_from_slice(values);
    }

    /// Values of a named entry, in manifest order.
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        let mut off = 0;
        for e in &self.manifest {
            let len: usize = e.shape.iter().product();
            if e.name == name {
                return Some(&self.values[off..off + len]);
            }
            off += len;
        }
        None
    }
}

impl Default for Checkpoint {
    fn default() -> Self {
        Self::new()
    }
}
