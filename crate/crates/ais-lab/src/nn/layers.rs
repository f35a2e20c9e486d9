//! Network shapes: parameter layouts plus taped forward passes.
//!
//! Shapes do not own parameters; callers keep one flat `Vec<f64>` per
//! component and pass leaf vars in.

use rand::{Rng, RngExt};

use super::tape::{Tape, Var};

/// Feed-forward net with tanh hidden activations and a linear output
/// layer. `dims = [input, hidden..., output]`.
#[derive(Debug, Clone)]
pub struct MlpShape {
    pub dims: Vec<usize>,
}

impl MlpShape {
    pub fn new(dims: Vec<usize>) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        MlpShape { dims }
    }

    pub fn n_params(&self) -> usize {
        self.dims
            .windows(2)
            .map(|w| w[1] * w[0] + w[1])
            .sum()
    }

    pub fn init(&self, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.n_params());
        for w in self.dims.windows(2) {
            let scale = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[1] * w[0] {
                params.push(rng.random_range(-scale..scale));
            }
            for _ in 0..w[1] {
                params.push(0.0);
            }
        }
        params
    }

    pub fn forward(&self, tape: &mut Tape, params: &[Var], x: &[Var]) -> Vec<Var> {
        assert_eq!(params.len(), self.n_params());
        assert_eq!(x.len(), self.dims[0]);
        let mut h: Vec<Var> = x.to_vec();
        let mut off = 0;
        let n_layers = self.dims.len() - 1;
        for (l, w) in self.dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut out = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let row = &params[off + o * fan_in..off + (o + 1) * fan_in];
                let mut acc = tape.dot(row, &h);
                let bias = params[off + fan_out * fan_in + o];
                acc = tape.add(acc, bias);
                if l + 1 < n_layers {
                    acc = tape.tanh(acc);
                }
                out.push(acc);
            }
            off += fan_out * fan_in + fan_out;
            h = out;
        }
        h
    }
}

/// Standard GRU cell: update gate, reset gate, tanh candidate.
///
/// Parameter layout: `W_u, U_u, b_u, W_r, U_r, b_r, W_c, U_c, b_c` with
/// `W_* : hidden x input`, `U_* : hidden x hidden`.
#[derive(Debug, Clone)]
pub struct GruShape {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruShape {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        GruShape {
            input_dim,
            hidden_dim,
        }
    }

    pub fn n_params(&self) -> usize {
        3 * (self.hidden_dim * self.input_dim + self.hidden_dim * self.hidden_dim + self.hidden_dim)
    }

    pub fn init(&self, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
        let scale = 1.0 / ((self.input_dim + self.hidden_dim) as f64).sqrt();
        (0..self.n_params())
            .map(|_| rng.random_range(-scale..scale))
            .collect()
    }

    /// One recurrence step `z' = (1 - u) ⊙ z + u ⊙ c`. The start hidden
    /// state is all zeros.
    pub fn step(&self, tape: &mut Tape, params: &[Var], z: &[Var], x: &[Var]) -> Vec<Var> {
        assert_eq!(params.len(), self.n_params());
        assert_eq!(z.len(), self.hidden_dim);
        assert_eq!(x.len(), self.input_dim);
        let (h, i) = (self.hidden_dim, self.input_dim);
        let block = h * i + h * h + h;
        let gate = |tape: &mut Tape, off: usize, extra_z: &[Var]| -> Vec<Var> {
            let w = &params[off..off + h * i];
            let u = &params[off + h * i..off + h * i + h * h];
            let b = &params[off + h * i + h * h..off + block];
            (0..h)
                .map(|o| {
                    let wx = tape.dot(&w[o * i..(o + 1) * i], x);
                    let uz = tape.dot(&u[o * h..(o + 1) * h], extra_z);
                    let s = tape.add(wx, uz);
                    tape.add(s, b[o])
                })
                .collect()
        };
        let u_pre = gate(tape, 0, z);
        let u_gate: Vec<Var> = u_pre.into_iter().map(|g| tape.sigmoid(g)).collect();
        let r_pre = gate(tape, block, z);
        let r_gate: Vec<Var> = r_pre.into_iter().map(|g| tape.sigmoid(g)).collect();
        let rz: Vec<Var> = r_gate.iter().zip(z).map(|(&r, &zz)| tape.mul(r, zz)).collect();
        let c_pre = gate(tape, 2 * block, &rz);
        let cand: Vec<Var> = c_pre.into_iter().map(|g| tape.tanh(g)).collect();
        (0..h)
            .map(|o| {
                let keep = {
                    let one_minus_u = tape.scale(u_gate[o], -1.0);
                    let one_minus_u = tape.add_const(one_minus_u, 1.0);
                    tape.mul(one_minus_u, z[o])
                };
                let take = tape.mul(u_gate[o], cand[o]);
                tape.add(keep, take)
            })
            .collect()
    }

    pub fn zero_state(&self, tape: &mut Tape) -> Vec<Var> {
        (0..self.hidden_dim).map(|_| tape.leaf(0.0)).collect()
    }
}

/// One-hot encoding of a `(state, previous action)` pair, used as GRU
/// input on tabular environments. The initial dummy action encodes as all
/// zeros.
pub fn encode_state_action(
    tape: &mut Tape,
    n_states: usize,
    n_actions: usize,
    state: usize,
    prev_action: Option<usize>,
) -> Vec<Var> {
    let mut enc = vec![0.0; n_states + n_actions];
    enc[state] = 1.0;
    if let Some(a) = prev_action {
        enc[n_states + a] = 1.0;
    }
    tape.leaves(&enc)
}

/// Raw state vector concatenated with the previous action vector.
pub fn encode_continuous(
    tape: &mut Tape,
    state: &[f64],
    action_dim: usize,
    prev_action: Option<&[f64]>,
) -> Vec<Var> {
    let mut enc = state.to_vec();
    match prev_action {
        Some(a) => enc.extend_from_slice(a),
        None => enc.extend(std::iter::repeat(0.0).take(action_dim)),
    }
    tape.leaves(&enc)
}

/// Diagonal Gaussian log-density of `x` under mean vars and a shared
/// log-std value.
pub fn gaussian_log_prob(tape: &mut Tape, mean: &[Var], log_std: f64, x: &[f64]) -> Var {
    let sigma = log_std.exp();
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let terms: Vec<Var> = mean
        .iter()
        .zip(x)
        .map(|(&m, &xi)| {
            let shifted = tape.add_const(m, -xi);
            let scaled = tape.scale(shifted, 1.0 / sigma);
            let sq = tape.sqr(scaled);
            let half = tape.scale(sq, -0.5);
            tape.add_const(half, -log_std - half_ln_2pi)
        })
        .collect();
    tape.sum(&terms)
}
