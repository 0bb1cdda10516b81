//! Brute-force and dense reference computations shared by the integration
//! tests. Nothing here calls the library code it is used to check.

#![allow(dead_code)]

use pushpull::graph::Digraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adjacency as a dense boolean matrix, `adj[u][v]` for edge `u -> v`.
pub fn adjacency(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut adj = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        adj[u][v] = true;
    }
    adj
}

/// Every simple directed path from `from` to `to`, as node lists.
pub fn simple_paths(adj: &[Vec<bool>], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<bool>], to: usize, path: &mut Vec<usize>, seen: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().unwrap();
        if cur == to {
            out.push(path.clone());
            return;
        }
        for next in 0..adj.len() {
            if adj[cur][next] && !seen[next] {
                seen[next] = true;
                path.push(next);
                walk(adj, to, path, seen, out);
                path.pop();
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; adj.len()];
    seen[from] = true;
    let mut out = Vec::new();
    walk(adj, to, &mut vec![from], &mut seen, &mut out);
    out
}

/// Shortest paths for each ordered pair `(j, l)`, `j != l`, by enumerating
/// all simple paths. `None` if some pair is unreachable.
pub fn shortest_path_sets(g: &Digraph) -> Option<Vec<((usize, usize), Vec<Vec<usize>>)>> {
    let adj = adjacency(g);
    let n = g.node_count();
    let mut out = Vec::new();
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let paths = simple_paths(&adj, j, l);
            let best = paths.iter().map(Vec::len).min()?;
            out.push(((j, l), paths.into_iter().filter(|p| p.len() == best).collect()));
        }
    }
    Some(out)
}

pub fn brute_diameter(g: &Digraph) -> Option<usize> {
    let sets = shortest_path_sets(g)?;
    Some(sets.iter().map(|(_, ps)| ps[0].len() - 1).max().unwrap_or(1).max(1))
}

/// Maximum over all shortest-path coverings (one path per ordered pair) of
/// the largest number of covering paths through a single edge.
pub fn brute_max_edge_utility(g: &Digraph) -> Option<usize> {
    let sets = shortest_path_sets(g)?;
    let n = g.node_count();
    let mut load = vec![0usize; n * n];
    let mut best = 0;
    fn edges(path: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
        path.windows(2).map(|w| (w[0], w[1]))
    }
    fn rec(
        sets: &[((usize, usize), Vec<Vec<usize>>)],
        i: usize,
        n: usize,
        load: &mut [usize],
        best: &mut usize,
    ) {
        if i == sets.len() {
            *best = (*best).max(load.iter().copied().max().unwrap_or(0));
            return;
        }
        for p in &sets[i].1 {
            for (u, v) in edges(p) {
                load[u * n + v] += 1;
            }
            rec(sets, i + 1, n, load, best);
            for (u, v) in edges(p) {
                load[u * n + v] -= 1;
            }
        }
    }
    rec(&sets, 0, n, &mut load, &mut best);
    Some(best.max(1))
}

/// Number of coverings `brute_max_edge_utility` would enumerate.
pub fn covering_count(g: &Digraph) -> Option<f64> {
    Some(shortest_path_sets(g)?.iter().map(|(_, ps)| ps.len() as f64).product())
}

/// Strong connectivity by transitive closure.
pub fn closure_connected(g: &Digraph) -> bool {
    let n = g.node_count();
    let mut reach = adjacency(g);
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach.iter().all(|r| r.iter().all(|&b| b))
}

/// All digraphs on `n` labelled nodes without self-loops.
pub fn all_digraphs(n: usize) -> impl Iterator<Item = Digraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).filter(|(u, v)| u != v).collect();
    let total = 1u64 << pairs.len();
    (0..total).map(move |mask| {
        let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
        Digraph::new(n, edges).unwrap()
    })
}

/// Erdős–Rényi digraph with a Hamiltonian cycle on a random permutation
/// added, so the result is always strongly connected.
pub fn random_strongly_connected(n: usize, p: f64, rng: &mut impl Rng) -> Digraph {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut edges = Vec::new();
    if n > 1 {
        for i in 0..n {
            edges.push((perm[i], perm[(i + 1) % n]));
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < p && !edges.contains(&(u, v)) {
                edges.push((u, v));
            }
        }
    }
    Digraph::new(n, edges).unwrap()
}

/// Uniform row-stochastic weights as a dense row-major matrix:
/// `A_ij = 1/(indeg(i) + 1)` on `j = i` and every in-neighbor `j`.
pub fn dense_row_stochastic(g: &Digraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let adj = adjacency(g);
    (0..n)
        .map(|i| {
            let deg = (0..n).filter(|&j| adj[j][i]).count();
            (0..n).map(|j| if j == i || adj[j][i] { 1.0 / (deg + 1) as f64 } else { 0.0 }).collect()
        })
        .collect()
}

/// Uniform column-stochastic weights: `B_ij = 1/(outdeg(j) + 1)` on
/// `i = j` and every out-neighbor `i` of `j`.
pub fn dense_column_stochastic(g: &Digraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let adj = adjacency(g);
    let outdeg: Vec<usize> = (0..n).map(|j| adj[j].iter().filter(|&&b| b).count()).collect();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j || adj[j][i] { 1.0 / (outdeg[j] + 1) as f64 } else { 0.0 }).collect())
        .collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn transpose_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    (0..m.len()).map(|j| m.iter().zip(v).map(|(row, w)| row[j] * w).sum()).collect()
}

pub fn min_positive(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
}

/// Spectral radius of a 3x3 matrix from a Schur decomposition, independent
/// of the closed-form cubic.
pub fn schur_spectral_radius(m: &[[f64; 3]; 3]) -> f64 {
    let mat = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    mat.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Floyd–Warshall hop distances; `usize::MAX` where unreachable.
pub fn floyd_warshall(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let adj = adjacency(g);
    let mut d: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 0 } else if adj[i][j] { 1 } else { inf }).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// `D * K` from Floyd–Warshall distances and the per-edge pair count.
pub fn diameter_times_utility_oracle(g: &Digraph) -> f64 {
    let d = floyd_warshall(g);
    let n = g.node_count();
    let diam = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| d[i][j]).max().unwrap_or(1).max(1);
    let k = g
        .edges()
        .map(|(u, v)| {
            (0..n).flat_map(|j| (0..n).map(move |l| (j, l))).filter(|&(j, l)| j != l && d[j][u] + 1 + d[v][l] == d[j][l]).count()
        })
        .max()
        .unwrap_or(1)
        .max(1);
    (diam * k) as f64
}

/// Random point of the open simplex (normalized exponentials).
pub fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn gaussian_rows(n: usize, p: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| (0..p).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Least-squares line through `(x, ln y)`: `(slope, r_squared)`.
pub fn log_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((sxy / sxx, r2))
}

/// Linear-convergence verdict on a residual trace `(k, residual)`: the
/// first round reaching `target`, and the log-linear fit over the second
/// half of the rounds up to that point (or the whole trace if never reached).
#[derive(Clone, Debug)]
pub struct Convergence {
    pub reached: Option<usize>,
    pub final_residual: f64,
    pub slope: f64,
    pub r_squared: f64,
}

impl Convergence {
    pub fn of(trace: &[(usize, f64)], target: f64) -> Self {
        let reached = trace.iter().find(|(_, r)| *r <= target).map(|(k, _)| *k);
        let end = reached.unwrap_or_else(|| trace.last().map_or(0, |t| t.0));
        let pts: Vec<(f64, f64)> =
            trace.iter().filter(|(k, _)| 2 * k >= end && *k <= end).map(|&(k, r)| (k as f64, r)).collect();
        let (slope, r_squared) = log_fit(&pts).unwrap_or((f64::NAN, f64::NAN));
        let final_residual = trace.iter().find(|(k, _)| *k == end).map_or(f64::NAN, |t| t.1);
        Self { reached, final_residual, slope, r_squared }
    }

    pub fn linear(&self) -> bool {
        self.reached.is_some() && self.slope < 0.0 && self.r_squared >= 0.99
    }
}
