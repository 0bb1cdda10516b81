use rand::seq::SliceRandom;
use rand::Rng;

use super::{Digraph, DigraphSequence, GraphError};
use crate::rng::{derive_seed, seeded, SimRng};

/// Fixed topology for static sequences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology {
    Complete,
    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    Ring,
    /// One draw of the ring-plus-extras random graph.
    Random { edge_probability: f64 },
}

/// Graph sequence generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SequenceKind {
    /// Each round: a directed ring over a fresh random node permutation, plus
    /// every other ordered pair independently with `edge_probability`.
    RandomStronglyConnected { edge_probability: f64 },
    /// The same graph every round.
    Static(Topology),
    /// One random strongly connected graph whose edges are split across `C`
    /// consecutive rounds so that no single round is strongly connected; the
    /// split repeats with period `C`, so any `C` consecutive rounds recover
    /// the full graph.
    Partitioned { edge_probability: f64 },
}

/// Builds a deterministic graph sequence of `horizon` rounds on `n` nodes.
pub fn generate_sequence(
    n: usize,
    kind: SequenceKind,
    horizon: usize,
    window: usize,
    seed: u64,
) -> Result<DigraphSequence, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameters(format!("need at least 2 nodes, got {n}")));
    }
    if horizon == 0 {
        return Err(GraphError::InvalidParameters("horizon must be at least 1".into()));
    }
    if window == 0 {
        return Err(GraphError::InvalidParameters("window must be at least 1".into()));
    }
    let mut rng = seeded(derive_seed(seed, 0x6772_6170));
    let graphs = match kind {
        SequenceKind::RandomStronglyConnected { edge_probability } => {
            check_probability(edge_probability)?;
            (0..horizon)
                .map(|_| ring_plus_extras(n, edge_probability, &mut rng))
                .collect::<Result<Vec<_>, _>>()?
        }
        SequenceKind::Static(topology) => {
            let g = match topology {
                Topology::Complete => Digraph::complete(n)?,
                Topology::Ring => Digraph::ring(n)?,
                Topology::Random { edge_probability } => {
                    check_probability(edge_probability)?;
                    ring_plus_extras(n, edge_probability, &mut rng)?
                }
            };
            vec![g; horizon]
        }
        SequenceKind::Partitioned { edge_probability } => {
            check_probability(edge_probability)?;
            if window < 2 {
                return Err(GraphError::InvalidParameters(
                    "partitioned sequences need a window of at least 2".into(),
                ));
            }
            let base = ring_plus_extras(n, edge_probability, &mut rng)?;
            let parts = partition_edges(&base, window, &mut rng)?;
            (0..horizon).map(|k| parts[k % window].clone()).collect()
        }
    };
    DigraphSequence::new(graphs, window)
}

fn check_probability(p: f64) -> Result<(), GraphError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::InvalidParameters(format!("edge probability {p} outside [0, 1]")))
    }
}

fn ring_plus_extras(n: usize, edge_probability: f64, rng: &mut SimRng) -> Result<Digraph, GraphError> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    for j in 0..n {
        for l in 0..n {
            // draw for every pair so the stream does not depend on the ring
            let keep = rng.random::<f64>() < edge_probability;
            if keep && j != l {
                edges.push((j, l));
            }
        }
    }
    Digraph::from_edges_lossy(n, edges)
}

/// Splits the edges of `base` into `parts` graphs. Round `r` is denied every
/// in-edge of a designated node, which keeps it from being strongly
/// connected; each part gets at least one edge.
fn partition_edges(base: &Digraph, parts: usize, rng: &mut SimRng) -> Result<Vec<Digraph>, GraphError> {
    let n = base.node_count();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let starved: Vec<usize> = (0..parts).map(|r| nodes[r % n]).collect();

    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    if edges.len() < parts {
        return Err(GraphError::Infeasible(format!(
            "{} edges cannot fill {parts} non-empty rounds",
            edges.len()
        )));
    }
    edges.shuffle(rng);

    let mut assignment: Vec<Option<usize>> = vec![None; edges.len()];
    for (r, &node) in starved.iter().enumerate() {
        let slot = (0..edges.len())
            .find(|&e| assignment[e].is_none() && edges[e].1 != node)
            .ok_or_else(|| GraphError::Infeasible(format!("no edge available for round {r}")))?;
        assignment[slot] = Some(r);
    }
    for (e, &(_, head)) in edges.iter().enumerate() {
        if assignment[e].is_some() {
            continue;
        }
        let allowed: Vec<usize> = (0..parts).filter(|&r| starved[r] != head).collect();
        if allowed.is_empty() {
            return Err(GraphError::Infeasible(format!("edge into node {head} has no admissible round")));
        }
        assignment[e] = Some(allowed[rng.random_range(0..allowed.len())]);
    }

    let mut buckets = vec![Vec::new(); parts];
    for (e, r) in assignment.into_iter().enumerate() {
        buckets[r.expect("every edge assigned")].push(edges[e]);
    }
    buckets.into_iter().map(|b| Digraph::from_edges_lossy(n, b)).collect()
}
