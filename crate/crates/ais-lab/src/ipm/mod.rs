//! Integral probability metrics on finite supports, their Minkowski
//! functionals, and the constants the approximation bounds consume.

mod kernel;
mod transport;

pub use kernel::{
    distance_kernel, mmd_closed, mmd_mean_surrogate, mmd_u_statistic, rkhs_norm, Anchor,
    KernelSpec, RkhsNorm,
};
pub use transport::{exact_transport, wasserstein_exact, TRANSPORT_SUPPORT_LIMIT};

use crate::error::{Error, Result};

/// Probability vector over an indexed support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    pub probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidInput("probabilities must be finite and nonnegative".into()));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(DiscreteDist { probs })
    }

    pub fn new_unchecked(probs: Vec<f64>) -> Self {
        DiscreteDist { probs }
    }

    pub fn delta(index: usize, len: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        DiscreteDist { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.probs.clone()).map(|_| ())
    }
}

/// Geometry of the support points behind a [`DiscreteDist`].
#[derive(Debug, Clone)]
pub enum PointSet {
    /// Points are the integers `0..n`, embedded on the real line.
    Ids(usize),
    /// Explicit real-vector embedding per point.
    Vectors(Vec<Vec<f64>>),
}

impl PointSet {
    pub fn len(&self) -> usize {
        match self {
            PointSet::Ids(n) => *n,
            PointSet::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 1-D coordinate of a point, when the embedding is one-dimensional.
    pub fn coord_1d(&self, i: usize) -> Option<f64> {
        match self {
            PointSet::Ids(_) => Some(i as f64),
            PointSet::Vectors(v) => {
                if v[i].len() == 1 {
                    Some(v[i][0])
                } else {
                    None
                }
            }
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Ground metric over a [`PointSet`].
#[derive(Debug, Clone)]
pub enum MetricSpec {
    /// `d(x, y) = 1` iff `x != y`.
    Discrete,
    /// Euclidean distance on the point embedding.
    Euclidean,
    /// Explicit pairwise distance table.
    Table(Vec<Vec<f64>>),
}

impl MetricSpec {
    pub fn distance(&self, points: &PointSet, i: usize, j: usize) -> f64 {
        match self {
            MetricSpec::Discrete => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            MetricSpec::Euclidean => match points {
                PointSet::Ids(_) => (i as f64 - j as f64).abs(),
                PointSet::Vectors(v) => euclidean(&v[i], &v[j]),
            },
            MetricSpec::Table(t) => t[i][j],
        }
    }

    /// Symmetry, nonnegativity, zero diagonal; triangle inequality for
    /// user tables.
    pub fn validate(&self, points: &PointSet) -> Result<()> {
        if let MetricSpec::Table(t) = self {
            let n = points.len();
            if t.len() != n || t.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidInput("distance table shape mismatch".into()));
            }
            for i in 0..n {
                if t[i][i] != 0.0 {
                    return Err(Error::InvalidInput("distance table diagonal must be zero".into()));
                }
                for j in 0..n {
                    if t[i][j] < 0.0 || !t[i][j].is_finite() {
                        return Err(Error::InvalidInput("distances must be finite and nonnegative".into()));
                    }
                    if (t[i][j] - t[j][i]).abs() > 1e-12 {
                        return Err(Error::InvalidInput("distance table must be symmetric".into()));
                    }
                    for k in 0..n {
                        if t[i][j] > t[i][k] + t[k][j] + 1e-12 {
                            return Err(Error::InvalidInput(format!(
                                "triangle inequality fails at ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn diameter(&self, points: &PointSet) -> f64 {
        let n = points.len();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max(self.distance(points, i, j));
            }
        }
        d
    }
}

/// Which IPM instance a bound or loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IpmChoice {
    /// Total variation with the half-span functional; the metric itself is
    /// the L1 distance.
    Tv,
    /// Kantorovich distance over a ground metric.
    #[serde(alias = "w", alias = "wass")]
    Wasserstein,
    /// Maximum mean discrepancy for a chosen kernel.
    Mmd,
}

impl IpmChoice {
    pub fn label(&self) -> &'static str {
        match self {
            IpmChoice::Tv => "tv",
            IpmChoice::Wasserstein => "w",
            IpmChoice::Mmd => "mmd",
        }
    }
}

/// IPM over the span-bounded class `{f : span(f)/2 <= 1}`: the L1 distance
/// `sum |p - q|`. Twice the classical total variation.
pub fn tv_ipm(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.len() != q.len() {
        return Err(Error::InvalidInput("supports must be index-aligned".into()));
    }
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// Classical total variation `sum |p - q| / 2`.
pub fn tv_std(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    Ok(0.5 * tv_ipm(p, q)?)
}

/// Dispatch a distance computation for one IPM instance.
pub fn ipm_distance(
    p: &DiscreteDist,
    q: &DiscreteDist,
    choice: IpmChoice,
    metric: &MetricSpec,
    kernel: &KernelSpec,
    points: &PointSet,
) -> Result<f64> {
    match choice {
        IpmChoice::Tv => tv_ipm(p, q),
        IpmChoice::Wasserstein => wasserstein_exact(p, q, metric, points),
        IpmChoice::Mmd => mmd_closed(p, q, kernel, metric, points),
    }
}

/// KL divergence with the Pinsker chain: returns `KL(p || q)`, the
/// classical total variation, and the Wasserstein upper bound
/// `diameter * sqrt(KL / 2)`. An absolute-continuity violation yields
/// infinite `kl` and `w_upper` rather than an error.
#[derive(Debug, Clone, Copy)]
pub struct PinskerChain {
    pub kl: f64,
    pub tv_std: f64,
    pub w_upper: f64,
}

pub fn kl_and_pinsker(p: &DiscreteDist, q: &DiscreteDist, diameter: f64) -> Result<PinskerChain> {
    p.validate()?;
    q.validate()?;
    if p.len() != q.len() {
        return Err(Error::InvalidInput("supports must be index-aligned".into()));
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi > 0.0 {
            if qi <= 0.0 {
                kl = f64::INFINITY;
                break;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    let kl = kl.max(0.0);
    let tv = tv_std(p, q)?;
    let w_upper = if kl.is_finite() {
        diameter * (kl / 2.0).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(PinskerChain {
        kl,
        tv_std: tv,
        w_upper,
    })
}

/// Max over pairs of `|f(i) - f(j)| / d(i, j)`. Unequal values at zero
/// distance yield an infinite constant.
pub fn lipschitz_fn(values: &[f64], metric: &MetricSpec, points: &PointSet) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let mut lip = 0.0f64;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let num = (values[i] - values[j]).abs();
            let den = metric.distance(points, i, j);
            if den == 0.0 {
                if num > 0.0 {
                    return Ok(f64::INFINITY);
                }
            } else {
                lip = lip.max(num / den);
            }
        }
    }
    Ok(lip)
}

/// Lipschitz constant of a kernel row map `i -> rows[i]`: max over pairs of
/// `W(rows[i], rows[j]) / d_row(i, j)` with the Wasserstein numerator taken
/// over the state geometry.
pub fn lipschitz_kernel(
    rows: &[DiscreteDist],
    row_metric: &MetricSpec,
    row_points: &PointSet,
    state_metric: &MetricSpec,
    state_points: &PointSet,
) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let mut lip = 0.0f64;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let num = wasserstein_exact(&rows[i], &rows[j], state_metric, state_points)?;
            let den = row_metric.distance(row_points, i, j);
            if den == 0.0 {
                if num > 1e-12 {
                    return Ok(f64::INFINITY);
                }
            } else {
                lip = lip.max(num / den);
            }
        }
    }
    Ok(lip)
}
