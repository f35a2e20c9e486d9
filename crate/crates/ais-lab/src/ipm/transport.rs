//! Exact discrete optimal transport for small supports.
//!
//! One-dimensional Euclidean instances use the sorted-CDF closed form;
//! everything else goes through a transportation-simplex solver that is
//! exact up to floating point on supports of at most
//! [`TRANSPORT_SUPPORT_LIMIT`] points.

use super::{DiscreteDist, MetricSpec, PointSet};
use crate::error::{Error, Result};

pub const TRANSPORT_SUPPORT_LIMIT: usize = 64;

const REDUCED_COST_TOL: f64 = 1e-12;

/// Exact Wasserstein-1 distance between index-aligned distributions.
pub fn wasserstein_exact(
    p: &DiscreteDist,
    q: &DiscreteDist,
    metric: &MetricSpec,
    points: &PointSet,
) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.len() != q.len() || p.len() != points.len() {
        return Err(Error::InvalidInput("supports must be index-aligned".into()));
    }
    metric.validate(points)?;

    if let MetricSpec::Euclidean = metric {
        if let Some(cost) = wasserstein_1d(p, q, points) {
            return Ok(cost);
        }
    }

    let n = p.len();
    if n > TRANSPORT_SUPPORT_LIMIT {
        return Err(Error::SizeLimit(format!(
            "general transport solver limited to {TRANSPORT_SUPPORT_LIMIT} support points, got {n}"
        )));
    }
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| metric.distance(points, i, j)).collect())
        .collect();
    let (total, _plan) = exact_transport(&p.probs, &q.probs, &cost)?;
    Ok(total)
}

/// Sorted-CDF closed form for 1-D euclidean supports.
fn wasserstein_1d(p: &DiscreteDist, q: &DiscreteDist, points: &PointSet) -> Option<f64> {
    let n = p.len();
    let mut coords = Vec::with_capacity(n);
    for i in 0..n {
        coords.push(points.coord_1d(i)?);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let mut acc = 0.0;
    let mut total = 0.0;
    for w in order.windows(2) {
        acc += p.probs[w[0]] - q.probs[w[0]];
        total += acc.abs() * (coords[w[1]] - coords[w[0]]);
    }
    Some(total)
}

/// Transportation simplex. Returns the optimal cost and a transport plan;
/// zero-mass supply or demand points are dropped before pivoting.
pub fn exact_transport(
    supply: &[f64],
    demand: &[f64],
    cost: &[Vec<f64>],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
    let m = rows.len();
    let n = cols.len();
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("empty marginals".into()));
    }
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    let c: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| cost[i][j]).collect())
        .collect();

    let mut flow = vec![vec![0.0f64; n]; m];
    let mut basis = vec![vec![false; n]; m];

    // Northwest-corner start; on simultaneous exhaustion keep a degenerate
    // zero-flow basic cell so the basis stays a spanning tree.
    {
        let mut a = a.clone();
        let mut b = b.clone();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = a[i].min(b[j]);
            flow[i][j] = x;
            basis[i][j] = true;
            a[i] -= x;
            b[j] -= x;
            if i + 1 == m && j + 1 == n {
                break;
            }
            if a[i] <= b[j] && i + 1 < m {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let max_pivots = 200 * (m + n) * (m + n) + 1000;
    for _ in 0..max_pivots {
        // Duals from the basis tree, u[0] = 0.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..m {
                for j in 0..n {
                    if basis[i][j] {
                        if !u[i].is_nan() && v[j].is_nan() {
                            v[j] = c[i][j] - u[i];
                            changed = true;
                        } else if u[i].is_nan() && !v[j].is_nan() {
                            u[i] = c[i][j] - v[j];
                            changed = true;
                        }
                    }
                }
            }
        }

        // Entering cell: most negative reduced cost, lexicographic ties.
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -REDUCED_COST_TOL;
        for i in 0..m {
            for j in 0..n {
                if !basis[i][j] {
                    let rc = c[i][j] - u[i] - v[j];
                    if rc < best {
                        best = rc;
                        enter = Some((i, j));
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            let total = flow
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &f)| f * c[i][j])
                        .sum::<f64>()
                })
                .sum();
            let mut plan = vec![vec![0.0; demand.len()]; supply.len()];
            for (ri, &i) in rows.iter().enumerate() {
                for (cj, &j) in cols.iter().enumerate() {
                    plan[i][j] = flow[ri][cj];
                }
            }
            return Ok((total, plan));
        };

        // Unique cycle created by the entering cell: alternating row/col
        // path through basis cells from (ei, ej) back to itself.
        let cycle = find_cycle(&basis, m, n, ei, ej)
            .ok_or_else(|| Error::InvalidInput("degenerate basis lost its tree structure".into()))?;

        // Odd positions of the cycle lose flow; leaving cell is the
        // smallest such flow (lexicographic ties).
        let mut theta = f64::INFINITY;
        let mut leave = (usize::MAX, usize::MAX);
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 1 {
                let f = flow[i][j];
                if f < theta - 1e-15 || (f < theta + 1e-15 && (i, j) < leave) {
                    theta = f;
                    leave = (i, j);
                }
            }
        }
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[i][j] += theta;
            } else {
                flow[i][j] -= theta;
            }
        }
        basis[ei][ej] = true;
        basis[leave.0][leave.1] = false;
        flow[leave.0][leave.1] = 0.0;
    }
    Err(Error::InvalidInput("transport solver exceeded pivot budget".into()))
}

/// Alternating cycle through basic cells, starting and ending at the
/// entering cell. Moves alternate along rows and columns; the closing move
/// back to the start must have the opposite orientation to the opening
/// move, so the start cell gets one row edge and one column edge.
fn find_cycle(
    basis: &[Vec<bool>],
    m: usize,
    n: usize,
    ei: usize,
    ej: usize,
) -> Option<Vec<(usize, usize)>> {
    fn dfs(
        basis: &[Vec<bool>],
        m: usize,
        n: usize,
        start: (usize, usize),
        cur: (usize, usize),
        move_in_row: bool,
        first_in_row: bool,
        path: &mut Vec<(usize, usize)>,
    ) -> bool {
        let (ci, cj) = cur;
        if move_in_row {
            if !first_in_row && ci == start.0 && path.len() >= 4 && path.len() % 2 == 0 {
                return true;
            }
            for j in 0..n {
                if j != cj && basis[ci][j] && !path.contains(&(ci, j)) {
                    path.push((ci, j));
                    if dfs(basis, m, n, start, (ci, j), false, first_in_row, path) {
                        return true;
                    }
                    path.pop();
                }
            }
        } else {
            if first_in_row && cj == start.1 && path.len() >= 4 && path.len() % 2 == 0 {
                return true;
            }
            for i in 0..m {
                if i != ci && basis[i][cj] && !path.contains(&(i, cj)) {
                    path.push((i, cj));
                    if dfs(basis, m, n, start, (i, cj), true, first_in_row, path) {
                        return true;
                    }
                    path.pop();
                }
            }
        }
        false
    }

    for &first_in_row in &[true, false] {
        let mut path = vec![(ei, ej)];
        if dfs(basis, m, n, (ei, ej), (ei, ej), first_in_row, first_in_row, &mut path) {
            return Some(path);
        }
    }
    None
}
