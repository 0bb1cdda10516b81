//! Directed communication graphs and the structural quantities the
//! convergence constants depend on.

mod generate;
mod io;
mod metrics;

pub use generate::{generate_sequence, SequenceKind, Topology};
pub use io::{parse_rounds, write_rounds};
pub use metrics::{
    all_pairs_distances, diameter, edge_utilities, is_strongly_connected, max_edge_utility,
    shortest_path_via, DistanceMatrix, GraphMetrics,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({from}, {to}) has an endpoint outside 0..{n}")]
    EndpointOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop at node {0}; diagonals are added by the mixing layer")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("graph sequence is empty")]
    EmptySequence,
    #[error("round {round} has {found} nodes, expected {expected}")]
    NodeCountMismatch { round: usize, expected: usize, found: usize },
    #[error("union of rounds {start}..{end} is not strongly connected (window {window})")]
    WindowNotConnected { start: usize, end: usize, window: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("infeasible generator request: {0}")]
    Infeasible(String),
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A directed graph on nodes `0..n` without self-loops or parallel edges.
///
/// Adjacency lists are kept sorted, so iteration order over edges is
/// `(j, l)` lexicographic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut out_adj = vec![Vec::new(); n];
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(GraphError::EndpointOutOfRange { from, to, n });
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            out_adj[from].push(to);
        }
        let mut in_adj = vec![Vec::new(); n];
        for (from, outs) in out_adj.iter_mut().enumerate() {
            outs.sort_unstable();
            if let Some(w) = outs.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(from, w[0]));
            }
            for &to in outs.iter() {
                in_adj[to].push(from);
            }
        }
        Ok(Self { out_adj, in_adj })
    }

    /// Like [`Digraph::new`] but silently drops duplicates and self-loops.
    pub fn from_edges_lossy<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
        list.sort_unstable();
        list.dedup();
        Self::new(n, list)
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).flat_map(|j| (0..n).filter(move |&l| l != j).map(move |l| (j, l))))
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`. For `n == 1` this is the
    /// single isolated node.
    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n == 1 {
            return Self::empty(1);
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.out_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    /// Edges in `(from, to)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(j, outs)| outs.iter().map(move |&l| (j, l)))
    }

    #[inline]
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    #[inline]
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_adj
            .get(from)
            .is_some_and(|outs| outs.binary_search(&to).is_ok())
    }

    /// Edge-set union of graphs on the same node count.
    pub fn union<'a, I>(graphs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = &'a Digraph>,
    {
        let mut iter = graphs.into_iter().peekable();
        let n = iter.peek().ok_or(GraphError::EmptySequence)?.node_count();
        let mut edges = Vec::new();
        for (round, g) in iter.enumerate() {
            if g.node_count() != n {
                return Err(GraphError::NodeCountMismatch { round, expected: n, found: g.node_count() });
            }
            edges.extend(g.edges());
        }
        Self::from_edges_lossy(n, edges)
    }
}

/// Time-varying graphs `G_0, G_1, ...` on a fixed node set, with the window
/// length `C` over which consecutive edge-set unions are strongly connected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigraphSequence {
    graphs: Vec<Digraph>,
    window: usize,
}

impl DigraphSequence {
    /// Validates that all rounds share `n` and that every union of `window`
    /// consecutive rounds is strongly connected (every single round when
    /// `window == 1`).
    pub fn new(graphs: Vec<Digraph>, window: usize) -> Result<Self, GraphError> {
        let seq = Self::new_unchecked(graphs, window)?;
        let w = window.min(seq.graphs.len());
        for start in 0..=(seq.graphs.len() - w) {
            let union = Digraph::union(&seq.graphs[start..start + w])?;
            if !is_strongly_connected(&union) {
                return Err(GraphError::WindowNotConnected { start, end: start + w, window });
            }
        }
        Ok(seq)
    }

    /// Checks shapes only; connectivity is left to the caller.
    pub fn new_unchecked(graphs: Vec<Digraph>, window: usize) -> Result<Self, GraphError> {
        if window == 0 {
            return Err(GraphError::InvalidParameters("window must be at least 1".into()));
        }
        let n = graphs.first().ok_or(GraphError::EmptySequence)?.node_count();
        if let Some((round, g)) = graphs.iter().enumerate().find(|(_, g)| g.node_count() != n) {
            return Err(GraphError::NodeCountMismatch { round, expected: n, found: g.node_count() });
        }
        Ok(Self { graphs, window })
    }

    pub fn node_count(&self) -> usize {
        self.graphs[0].node_count()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn graphs(&self) -> &[Digraph] {
        &self.graphs
    }

    /// Graph used at round `k`; rounds past the end cycle through the sequence.
    pub fn round(&self, k: usize) -> &Digraph {
        &self.graphs[k % self.graphs.len()]
    }
}
