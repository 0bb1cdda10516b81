use std::collections::VecDeque;

use super::{Digraph, GraphError};

/// Hop distances between every ordered pair. `None` marks an unreachable pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<Option<u32>>,
}

impl DistanceMatrix {
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> Option<u32> {
        self.hops[from * self.n + to]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn all_finite(&self) -> bool {
        self.hops.iter().all(Option::is_some)
    }

    /// Largest finite off-diagonal distance, or `None` for a single node.
    pub fn max_finite(&self) -> Option<u32> {
        (0..self.n)
            .flat_map(|j| (0..self.n).filter(move |&l| l != j).map(move |l| (j, l)))
            .filter_map(|(j, l)| self.get(j, l))
            .max()
    }
}

/// BFS from every source.
pub fn all_pairs_distances(g: &Digraph) -> DistanceMatrix {
    let n = g.node_count();
    let mut hops = vec![None; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for src in 0..n {
        let row = &mut hops[src * n..(src + 1) * n];
        row[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = row[u].unwrap_or(0);
            for &v in g.out_neighbors(u) {
                if row[v].is_none() {
                    row[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    DistanceMatrix { n, hops }
}

pub fn is_strongly_connected(g: &Digraph) -> bool {
    // forward and backward reachability from node 0
    let n = g.node_count();
    fn reach_all<'g>(n: usize, next: impl Fn(usize) -> &'g [usize]) -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in next(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
    reach_all(n, |u| g.out_neighbors(u)) && reach_all(n, |u| g.in_neighbors(u))
}

fn connected_distances(g: &Digraph) -> Result<DistanceMatrix, GraphError> {
    let d = all_pairs_distances(g);
    if d.all_finite() {
        Ok(d)
    } else {
        Err(GraphError::NotStronglyConnected)
    }
}

/// Longest shortest-path length over ordered pairs of distinct nodes.
///
/// A single node has no pairs; its diameter is reported as 1 so that the
/// contraction constants stay well defined.
pub fn diameter(g: &Digraph) -> Result<usize, GraphError> {
    let d = connected_distances(g)?;
    Ok(d.max_finite().unwrap_or(1) as usize)
}

/// Number of ordered pairs `(j, l)` having at least one shortest path through
/// each edge, listed in edge order.
///
/// An edge `(u, v)` lies on some shortest `j -> l` path exactly when
/// `d(j, u) + 1 + d(v, l) == d(j, l)`. Since a shortest-path covering picks
/// one path per ordered pair independently, the best covering for a fixed
/// edge routes every such pair through it, so these counts are the per-edge
/// maxima over all coverings.
pub fn edge_utilities(g: &Digraph) -> Result<Vec<((usize, usize), usize)>, GraphError> {
    let d = connected_distances(g)?;
    let n = g.node_count();
    let dist = |a: usize, b: usize| d.get(a, b).unwrap_or(u32::MAX);
    Ok(g.edges()
        .map(|(u, v)| {
            let mut count = 0;
            for j in 0..n {
                let dju = dist(j, u);
                for l in 0..n {
                    if l != j && dju + 1 + dist(v, l) == dist(j, l) {
                        count += 1;
                    }
                }
            }
            ((u, v), count)
        })
        .collect())
}

/// Maximal edge-utility: the largest number of covering paths any single edge
/// can carry, maximized over shortest-path coverings.
pub fn max_edge_utility(g: &Digraph) -> Result<usize, GraphError> {
    let utilities = edge_utilities(g)?;
    // a single node has no edges and no pairs; 1 keeps D*K positive
    Ok(utilities.iter().map(|&(_, c)| c).max().unwrap_or(1).max(1))
}

/// Reconstructs a shortest `from -> to` path that traverses `edge`, if one
/// exists. Returned as the node sequence.
pub fn shortest_path_via(
    g: &Digraph,
    d: &DistanceMatrix,
    from: usize,
    to: usize,
    edge: (usize, usize),
) -> Option<Vec<usize>> {
    let (u, v) = edge;
    let total = d.get(from, to)?;
    if d.get(from, u)? + 1 + d.get(v, to)? != total || !g.has_edge(u, v) {
        return None;
    }
    let mut path = walk_shortest(g, d, from, u)?;
    path.extend(walk_shortest(g, d, v, to)?);
    Some(path)
}

fn walk_shortest(g: &Digraph, d: &DistanceMatrix, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        let remaining = d.get(cur, to)?;
        cur = *g
            .out_neighbors(cur)
            .iter()
            .find(|&&w| d.get(w, to) == Some(remaining - 1))?;
        path.push(cur);
    }
    Some(path)
}

/// Structural quantities of one strongly connected round.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMetrics {
    pub diameter: usize,
    pub max_edge_utility: usize,
    pub distances: DistanceMatrix,
}

impl GraphMetrics {
    pub fn compute(g: &Digraph) -> Result<Self, GraphError> {
        Ok(Self {
            diameter: diameter(g)?,
            max_edge_utility: max_edge_utility(g)?,
            distances: all_pairs_distances(g),
        })
    }

    /// `D(G) * K(G)` as a float, the denominator shared by the contraction
    /// constants.
    pub fn diameter_times_utility(&self) -> f64 {
        (self.diameter * self.max_edge_utility) as f64
    }
}
