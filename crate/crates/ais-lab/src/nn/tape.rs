//! Scalar reverse-mode differentiation on an append-only tape.
//!
//! Nodes are stored in evaluation order, which is already a topological
//! order, so the backward pass is a single reverse sweep that visits each
//! node exactly once. Everything is f64.

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub u32);

#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<f64>,
    n_parents: Vec<u8>,
    parents: Vec<[u32; 2]>,
    lgrads: Vec<[f64; 2]>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, v: Var) -> f64 {
        self.values[v.0 as usize]
    }

    pub fn values(&self, vs: &[Var]) -> Vec<f64> {
        vs.iter().map(|&v| self.value(v)).collect()
    }

    #[inline]
    fn push(&mut self, value: f64, n: u8, parents: [u32; 2], lgrads: [f64; 2]) -> Var {
        let id = self.values.len() as u32;
        self.values.push(value);
        self.n_parents.push(n);
        self.parents.push(parents);
        self.lgrads.push(lgrads);
        Var(id)
    }

    /// Input node: a parameter or observed value.
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(value, 0, [0, 0], [0.0, 0.0])
    }

    pub fn leaves(&mut self, values: &[f64]) -> Vec<Var> {
        values.iter().map(|&v| self.leaf(v)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, 2, [a.0, b.0], [1.0, 1.0])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, 2, [a.0, b.0], [1.0, -1.0])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va * vb, 2, [a.0, b.0], [vb, va])
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va / vb, 2, [a.0, b.0], [1.0 / vb, -va / (vb * vb)])
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.value(a);
        self.push(v, 1, [a.0, 0], [-1.0, 0.0])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = c * self.value(a);
        self.push(v, 1, [a.0, 0], [c, 0.0])
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) + c;
        self.push(v, 1, [a.0, 0], [1.0, 0.0])
    }

    pub fn sqr(&mut self, a: Var) -> Var {
        let va = self.value(a);
        self.push(va * va, 1, [a.0, 0], [2.0 * va, 0.0])
    }

    /// Square root with a 1e-12 floor inside, keeping the derivative
    /// finite at zero.
    pub fn sqrt_guarded(&mut self, a: Var) -> Var {
        let va = self.value(a) + 1e-12;
        let s = va.sqrt();
        self.push(s, 1, [a.0, 0], [0.5 / s, 0.0])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.value(a).tanh();
        self.push(t, 1, [a.0, 0], [1.0 - t * t, 0.0])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let s = 1.0 / (1.0 + (-va).exp());
        self.push(s, 1, [a.0, 0], [s * (1.0 - s), 0.0])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let e = self.value(a).exp();
        self.push(e, 1, [a.0, 0], [e, 0.0])
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let va = self.value(a);
        self.push(va.ln(), 1, [a.0, 0], [1.0 / va, 0.0])
    }

    /// Huber-style loss: `x^2 / 2` for `|x| <= 1`, `|x| - 1/2` beyond;
    /// the derivative is continuous.
    pub fn smooth_l1(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let (v, g) = if x.abs() <= 1.0 {
            (0.5 * x * x, x)
        } else {
            (x.abs() - 0.5, x.signum())
        };
        self.push(v, 1, [a.0, 0], [g, 0.0])
    }

    pub fn sum(&mut self, vars: &[Var]) -> Var {
        match vars.len() {
            0 => self.leaf(0.0),
            1 => vars[0],
            _ => {
                let mut acc = self.add(vars[0], vars[1]);
                for &v in &vars[2..] {
                    acc = self.add(acc, v);
                }
                acc
            }
        }
    }

    pub fn dot(&mut self, a: &[Var], b: &[Var]) -> Var {
        assert_eq!(a.len(), b.len());
        let prods: Vec<Var> = a.iter().zip(b).map(|(&x, &y)| self.mul(x, y)).collect();
        self.sum(&prods)
    }

    /// Numerically stable `ln(sum_i exp(l_i))`. The max shift is treated
    /// as a constant, which leaves the derivative exact.
    pub fn log_sum_exp(&mut self, logits: &[Var]) -> Var {
        let m = logits
            .iter()
            .map(|&l| self.value(l))
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<Var> = logits
            .iter()
            .map(|&l| {
                let shifted = self.add_const(l, -m);
                self.exp(shifted)
            })
            .collect();
        let total = self.sum(&exps);
        let ln_total = self.ln(total);
        self.add_const(ln_total, m)
    }

    /// Log-probabilities of a categorical head.
    pub fn log_softmax(&mut self, logits: &[Var]) -> Vec<Var> {
        let lse = self.log_sum_exp(logits);
        logits.iter().map(|&l| self.sub(l, lse)).collect()
    }

    /// Probabilities of a categorical head (overflow-guarded).
    pub fn softmax(&mut self, logits: &[Var]) -> Vec<Var> {
        let logp = self.log_softmax(logits);
        logp.into_iter().map(|lp| self.exp(lp)).collect()
    }

    /// Reverse sweep from a scalar root. Returns the adjoint of every node
    /// and the number of node visits.
    pub fn backward(&self, root: Var) -> Backward {
        let n = self.values.len();
        let mut adj = vec![0.0; n];
        adj[root.0 as usize] = 1.0;
        let mut visits = 0usize;
        for id in (0..=root.0 as usize).rev() {
            let a = adj[id];
            visits += 1;
            if a == 0.0 {
                continue;
            }
            let np = self.n_parents[id];
            if np >= 1 {
                adj[self.parents[id][0] as usize] += a * self.lgrads[id][0];
            }
            if np == 2 {
                adj[self.parents[id][1] as usize] += a * self.lgrads[id][1];
            }
        }
        Backward { adj, visits }
    }
}

/// Adjoints from one reverse sweep.
pub struct Backward {
    adj: Vec<f64>,
    pub visits: usize,
}

impl Backward {
    #[inline]
    pub fn grad(&self, v: Var) -> f64 {
        self.adj[v.0 as usize]
    }

    pub fn grads(&self, vars: &[Var]) -> Vec<f64> {
        vars.iter().map(|&v| self.grad(v)).collect()
    }
}

/// Plain-value smooth-L1 for non-taped callers.
pub fn smooth_l1(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}
