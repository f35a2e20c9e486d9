//! Kernels, closed-form and estimated MMD, and RKHS interpolation norms.

use super::{euclidean, DiscreteDist, MetricSpec, PointSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

const MMD_NEG_CLAMP: f64 = 1e-12;
const RKHS_RIDGE: f64 = 1e-10;

/// Anchor point of a distance-induced kernel.
#[derive(Debug, Clone)]
pub enum Anchor {
    /// Index into the support the kernel is evaluated on.
    Support(usize),
    /// Explicit point for raw-vector sample sets.
    Point(Vec<f64>),
}

#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// Energy-distance kernel with exponent `p` applied to the ground
    /// metric; the induced MMD is anchor-free.
    Energy { exponent: f64 },
    Gaussian { bandwidth: f64 },
    Laplace { scale: f64 },
    /// `k(x, y) = (d(x, x0)^p + d(y, x0)^p - d(x, y)^p) / 2`.
    DistanceInduced { exponent: f64, anchor: Anchor },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Energy { exponent } | KernelSpec::DistanceInduced { exponent, .. } => {
                if !(*exponent > 0.0 && *exponent <= 2.0) {
                    return Err(Error::InvalidInput(format!(
                        "distance exponent {exponent} outside (0, 2]"
                    )));
                }
            }
            KernelSpec::Gaussian { bandwidth } => {
                if !(*bandwidth > 0.0) {
                    return Err(Error::InvalidInput("bandwidth must be positive".into()));
                }
            }
            KernelSpec::Laplace { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::InvalidInput("scale must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Kernel value between indexed support points.
    pub fn eval_on_support(
        &self,
        metric: &MetricSpec,
        points: &PointSet,
        i: usize,
        j: usize,
    ) -> f64 {
        match self {
            KernelSpec::Energy { exponent } => {
                // Same kernel as DistanceInduced anchored at support point 0.
                let d = |a: usize, b: usize| metric.distance(points, a, b).powf(*exponent);
                0.5 * (d(i, 0) + d(j, 0) - d(i, j))
            }
            KernelSpec::Gaussian { bandwidth } => {
                let d = metric.distance(points, i, j);
                (-d * d / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Laplace { scale } => {
                let d = metric.distance(points, i, j);
                (-d / scale).exp()
            }
            KernelSpec::DistanceInduced { exponent, anchor } => {
                let x0 = match anchor {
                    Anchor::Support(idx) => *idx,
                    Anchor::Point(_) => 0,
                };
                let d = |a: usize, b: usize| metric.distance(points, a, b).powf(*exponent);
                0.5 * (d(i, x0) + d(j, x0) - d(i, j))
            }
        }
    }

    /// Kernel value between raw sample vectors (euclidean geometry).
    pub fn eval_on_vectors(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Energy { exponent } => {
                let zero = vec![0.0; x.len()];
                let d = |a: &[f64], b: &[f64]| euclidean(a, b).powf(*exponent);
                0.5 * (d(x, &zero) + d(y, &zero) - d(x, y))
            }
            KernelSpec::Gaussian { bandwidth } => {
                let d = euclidean(x, y);
                (-d * d / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Laplace { scale } => {
                let d = euclidean(x, y);
                (-d / scale).exp()
            }
            KernelSpec::DistanceInduced { exponent, anchor } => {
                let zero;
                let x0: &[f64] = match anchor {
                    Anchor::Point(p) => p,
                    Anchor::Support(_) => {
                        zero = vec![0.0; x.len()];
                        &zero
                    }
                };
                let d = |a: &[f64], b: &[f64]| euclidean(a, b).powf(*exponent);
                0.5 * (d(x, x0) + d(y, x0) - d(x, y))
            }
        }
    }

    /// Gram matrix over an indexed support.
    pub fn gram(&self, metric: &MetricSpec, points: &PointSet) -> Matrix {
        let n = points.len();
        let mut k = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                k.set(i, j, self.eval_on_support(metric, points, i, j));
            }
        }
        k
    }
}

/// Distance-induced kernel constructor.
pub fn distance_kernel(p_exponent: f64, anchor: Anchor) -> Result<KernelSpec> {
    let k = KernelSpec::DistanceInduced {
        exponent: p_exponent,
        anchor,
    };
    k.validate()?;
    Ok(k)
}

/// Closed-form MMD between index-aligned distributions, with exact
/// expectations over the product measure. Tiny negative squared values
/// are clamped to zero; anything below the clamp is a kernel-validity
/// error.
pub fn mmd_closed(
    p: &DiscreteDist,
    q: &DiscreteDist,
    kernel: &KernelSpec,
    metric: &MetricSpec,
    points: &PointSet,
) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    kernel.validate()?;
    if p.len() != q.len() || p.len() != points.len() {
        return Err(Error::InvalidInput("supports must be index-aligned".into()));
    }
    let n = p.len();
    let sq = match kernel {
        KernelSpec::Energy { exponent } => {
            // E d^p(X, W) - E d^p(X, X') / 2 - E d^p(W, W') / 2
            let mut cross = 0.0;
            let mut within_p = 0.0;
            let mut within_q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let d = metric.distance(points, i, j).powf(*exponent);
                    cross += p.probs[i] * q.probs[j] * d;
                    within_p += p.probs[i] * p.probs[j] * d;
                    within_q += q.probs[i] * q.probs[j] * d;
                }
            }
            cross - 0.5 * within_p - 0.5 * within_q
        }
        _ => {
            let diff: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| a - b).collect();
            let mut acc = 0.0;
            for i in 0..n {
                if diff[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if diff[j] != 0.0 {
                        acc += diff[i] * diff[j] * kernel.eval_on_support(metric, points, i, j);
                    }
                }
            }
            acc
        }
    };
    if sq < -MMD_NEG_CLAMP {
        return Err(Error::KernelValidity(format!("squared MMD {sq} below clamp")));
    }
    Ok(sq.max(0.0).sqrt())
}

/// Unbiased estimator of the squared MMD from two sample sets
/// (diagonal-excluded within-terms). May be negative.
pub fn mmd_u_statistic(xs: &[Vec<f64>], ys: &[Vec<f64>], kernel: &KernelSpec) -> Result<f64> {
    kernel.validate()?;
    let m = xs.len();
    let n = ys.len();
    if m < 2 || n < 2 {
        return Err(Error::SizeLimit("u-statistic needs at least 2 samples per side".into()));
    }
    let mut within_x = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                within_x += kernel.eval_on_vectors(&xs[i], &xs[j]);
            }
        }
    }
    within_x /= (m * (m - 1)) as f64;
    let mut within_y = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                within_y += kernel.eval_on_vectors(&ys[i], &ys[j]);
            }
        }
    }
    within_y /= (n * (n - 1)) as f64;
    let mut cross = 0.0;
    for x in xs {
        for y in ys {
            cross += kernel.eval_on_vectors(x, y);
        }
    }
    cross /= (m * n) as f64;
    Ok(within_x + within_y - 2.0 * cross)
}

/// Loss `(m - 2x)^T m` and its gradient `2m - 2x` with respect to `m`:
/// the sample surrogate whose gradient is an unbiased estimate of the
/// squared-MMD gradient for a mean-parameterised model.
pub fn mmd_mean_surrogate(m: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(m.len(), x.len(), "dimension mismatch");
    let loss = m
        .iter()
        .zip(x)
        .map(|(mi, xi)| (mi - 2.0 * xi) * mi)
        .sum();
    let grad = m.iter().zip(x).map(|(mi, xi)| 2.0 * mi - 2.0 * xi).collect();
    (loss, grad)
}

/// RKHS interpolation norm of per-point values against a Gram matrix.
#[derive(Debug, Clone, Copy)]
pub struct RkhsNorm {
    pub norm: f64,
    /// Set when the values could not be represented in the Gram's column
    /// space to tolerance; the reported norm is then the ridge solution's.
    pub representation_warning: bool,
}

/// Solve `K c = values` (ridge 1e-10, refined against `K` when the system
/// is consistent) and return `sqrt(c^T K c)`.
pub fn rkhs_norm(values: &[f64], gram: &Matrix) -> Result<RkhsNorm> {
    let n = gram.n;
    if values.len() != n {
        return Err(Error::InvalidInput("values length must match the Gram size".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (gram.get(i, j) - gram.get(j, i)).abs() > 1e-9 {
                return Err(Error::InvalidInput("Gram matrix must be symmetric".into()));
            }
        }
    }
    let scale = (0..n).map(|i| gram.get(i, i).abs()).fold(0.0f64, f64::max).max(1.0);
    let mut ridged = gram.clone();
    for i in 0..n {
        ridged.set(i, i, ridged.get(i, i) + RKHS_RIDGE * scale);
    }
    let vnorm = linalg::max_abs(values).max(1.0);
    let mut c = linalg::solve(&ridged, values)?;
    let mut res = linalg::max_abs(&linalg::residual(gram, &c, values));
    if res <= 1e-6 * vnorm {
        // Consistent system: refine against K itself to undo the ridge.
        for _ in 0..4 {
            let r = linalg::residual(gram, &c, values);
            if linalg::max_abs(&r) < 1e-12 * vnorm {
                break;
            }
            let dc = linalg::solve(&ridged, &r)?;
            for (ci, di) in c.iter_mut().zip(&dc) {
                *ci += di;
            }
        }
        res = linalg::max_abs(&linalg::residual(gram, &c, values));
    }
    let warn = res > 1e-6 * vnorm;
    let kc = gram.matvec(&c);
    let sq: f64 = c.iter().zip(&kc).map(|(a, b)| a * b).sum();
    Ok(RkhsNorm {
        norm: sq.max(0.0).sqrt(),
        representation_warning: warn,
    })
}
