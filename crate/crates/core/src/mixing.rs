//! Graph-compatible mixing matrices and the stochastic weight sequences
//! attached to them.
//!
//! A row-stochastic `A_k` pulls decision variables from in-neighbors; a
//! column-stochastic `B_k` pushes tracking directions to out-neighbors. The
//! weight sequences are `pi_{k+1} = B_k pi_k` from the uniform vector, and the
//! backward sequence `phi_k^T = phi_{k+1}^T A_k` pinned at a terminal vector.

use thiserror::Error;

use crate::graph::{Digraph, DigraphSequence};
use crate::stack::AgentStack;

/// Row sums, column sums and stochastic vectors must hit 1 within this.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixingError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) = {value} violates the graph sparsity pattern")]
    PatternViolation { row: usize, col: usize, value: f64 },
    #[error("{kind} {index} sums to {sum}, not 1")]
    NotStochastic { kind: &'static str, index: usize, sum: f64 },
    #[error("negative or non-finite entry {value} at index {index}")]
    InvalidEntry { index: usize, value: f64 },
    #[error("self weight {0} must lie in (0, 1)")]
    InvalidSelfWeight(f64),
}

/// How a node splits weight between itself and its neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum WeightScheme {
    /// `1 / (degree + 1)` on the node and every neighbor.
    #[default]
    Uniform,
    /// Keep `self_weight`, share the rest equally among neighbors. Nodes
    /// without neighbors keep everything.
    Lazy { self_weight: f64 },
}

impl WeightScheme {
    fn weights(self, degree: usize) -> Result<(f64, f64), MixingError> {
        match self {
            WeightScheme::Uniform => {
                let w = 1.0 / (degree + 1) as f64;
                Ok((w, w))
            }
            WeightScheme::Lazy { self_weight } => {
                if !(self_weight > 0.0 && self_weight < 1.0) {
                    return Err(MixingError::InvalidSelfWeight(self_weight));
                }
                if degree == 0 {
                    Ok((1.0, 0.0))
                } else {
                    Ok((self_weight, (1.0 - self_weight) / degree as f64))
                }
            }
        }
    }
}

fn min_positive(entries: &[f64]) -> f64 {
    entries.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
}

/// Dense `n x n` matrix applied to an agent stack: `out_i = sum_j M_ij x_j`.
fn apply_dense(n: usize, entries: &[f64], x: &AgentStack) -> AgentStack {
    let mut out = AgentStack::zeros(n, x.dim());
    for i in 0..n {
        let row = &entries[i * n..(i + 1) * n];
        let target = out.row_mut(i);
        for (j, &w) in row.iter().enumerate() {
            if w != 0.0 {
                crate::stack::axpy(w, x.row(j), target);
            }
        }
    }
    out
}

fn check_entries(entries: &[f64]) -> Result<(), MixingError> {
    match entries.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(index) => Err(MixingError::InvalidEntry { index, value: entries[index] }),
        None => Ok(()),
    }
}

/// Row-stochastic matrix compatible with a graph: `A_ij > 0` exactly for
/// `j` in the in-neighborhood of `i` or `j == i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowStochasticMatrix {
    n: usize,
    entries: Vec<f64>,
    min_positive: f64,
}

impl RowStochasticMatrix {
    /// Validates a dense row-major matrix against `g`.
    pub fn from_dense(g: &Digraph, entries: Vec<f64>) -> Result<Self, MixingError> {
        let n = g.node_count();
        if entries.len() != n * n {
            return Err(MixingError::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        check_entries(&entries)?;
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                let allowed = i == j || g.has_edge(j, i);
                if allowed != (v > 0.0) {
                    return Err(MixingError::PatternViolation { row: i, col: j, value: v });
                }
            }
            let sum: f64 = entries[i * n..(i + 1) * n].iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MixingError::NotStochastic { kind: "row", index: i, sum });
            }
        }
        let min_positive = min_positive(&entries);
        Ok(Self { n, entries, min_positive })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Smallest positive entry, `min(A^+)`.
    pub fn min_positive(&self) -> f64 {
        self.min_positive
    }

    /// `z_i = sum_j A_ij x_j`.
    pub fn mix(&self, x: &AgentStack) -> AgentStack {
        apply_dense(self.n, &self.entries, x)
    }

    /// `A^T v`, the backward step of the absolute probability sequence.
    pub fn transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self.get(i, j);
            }
        }
        out
    }
}

/// Column-stochastic matrix compatible with a graph: `B_ji > 0` exactly for
/// `j` in the out-neighborhood of `i` or `j == i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStochasticMatrix {
    n: usize,
    entries: Vec<f64>,
    min_positive: f64,
}

impl ColumnStochasticMatrix {
    pub fn from_dense(g: &Digraph, entries: Vec<f64>) -> Result<Self, MixingError> {
        let n = g.node_count();
        if entries.len() != n * n {
            return Err(MixingError::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        check_entries(&entries)?;
        for i in 0..n {
            for j in 0..n {
                let v = entries[j * n + i];
                let allowed = i == j || g.has_edge(i, j);
                if allowed != (v > 0.0) {
                    return Err(MixingError::PatternViolation { row: j, col: i, value: v });
                }
            }
            let sum: f64 = (0..n).map(|j| entries[j * n + i]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MixingError::NotStochastic { kind: "column", index: i, sum });
            }
        }
        let min_positive = min_positive(&entries);
        Ok(Self { n, entries, min_positive })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn min_positive(&self) -> f64 {
        self.min_positive
    }

    /// `w_i = sum_j B_ij y_j`.
    pub fn mix(&self, y: &AgentStack) -> AgentStack {
        apply_dense(self.n, &self.entries, y)
    }

    /// `B v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

pub fn build_row_stochastic(g: &Digraph) -> RowStochasticMatrix {
    build_row_stochastic_with(g, WeightScheme::Uniform).expect("uniform weights are always valid")
}

pub fn build_row_stochastic_with(g: &Digraph, scheme: WeightScheme) -> Result<RowStochasticMatrix, MixingError> {
    let n = g.node_count();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let ins = g.in_neighbors(i);
        let (own, other) = scheme.weights(ins.len())?;
        entries[i * n + i] = own;
        for &j in ins {
            entries[i * n + j] = other;
        }
    }
    RowStochasticMatrix::from_dense(g, entries)
}

pub fn build_column_stochastic(g: &Digraph) -> ColumnStochasticMatrix {
    build_column_stochastic_with(g, WeightScheme::Uniform).expect("uniform weights are always valid")
}

pub fn build_column_stochastic_with(
    g: &Digraph,
    scheme: WeightScheme,
) -> Result<ColumnStochasticMatrix, MixingError> {
    let n = g.node_count();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let outs = g.out_neighbors(i);
        let (own, other) = scheme.weights(outs.len())?;
        entries[i * n + i] = own;
        for &j in outs {
            entries[j * n + i] = other;
        }
    }
    ColumnStochasticMatrix::from_dense(g, entries)
}

/// The matrices used at one round.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingPair {
    pub row: RowStochasticMatrix,
    pub col: ColumnStochasticMatrix,
}

impl MixingPair {
    pub fn for_graph(g: &Digraph, scheme: WeightScheme) -> Result<Self, MixingError> {
        Ok(Self {
            row: build_row_stochastic_with(g, scheme)?,
            col: build_column_stochastic_with(g, scheme)?,
        })
    }

    pub fn size(&self) -> usize {
        self.row.size()
    }

    /// The graph read back from the off-diagonal support of `A`: edge
    /// `j -> i` wherever `A_ij > 0`.
    pub fn graph(&self) -> Digraph {
        let n = self.size();
        let edges = (0..n)
            .flat_map(|i| (0..n).map(move |j| (j, i)))
            .filter(|&(j, i)| i != j && self.row.get(i, j) > 0.0);
        Digraph::new(n, edges).expect("support of a validated matrix is a valid graph")
    }
}

/// Builds `horizon` rounds of matrices, cycling through `graphs` if it is
/// shorter than the horizon.
pub fn mixing_schedule(
    graphs: &DigraphSequence,
    horizon: usize,
    scheme: WeightScheme,
) -> Result<Vec<MixingPair>, MixingError> {
    // build each distinct round once, then clone for the cycle
    let base: Vec<MixingPair> = graphs
        .graphs()
        .iter()
        .take(horizon.max(1))
        .map(|g| MixingPair::for_graph(g, scheme))
        .collect::<Result<_, _>>()?;
    Ok((0..horizon).map(|k| base[k % base.len()].clone()).collect())
}

/// `(a, b)`: the smallest positive entries over all row- and column-stochastic
/// matrices of a schedule.
pub fn entry_lower_bounds(pairs: &[MixingPair]) -> (f64, f64) {
    pairs.iter().fold((f64::INFINITY, f64::INFINITY), |(a, b), p| {
        (a.min(p.row.min_positive()), b.min(p.col.min_positive()))
    })
}

/// Nonnegative weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticVector(Vec<f64>);

impl StochasticVector {
    pub fn new(values: Vec<f64>) -> Result<Self, MixingError> {
        check_entries(&values)?;
        let sum: f64 = values.iter().sum();
        if values.is_empty() || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(MixingError::NotStochastic { kind: "vector", index: 0, sum });
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Unit vector on coordinate `i`.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for StochasticVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `pi_0 = 1/n`, `pi_{k+1} = B_k pi_k`. Returns `len + 1` vectors.
pub fn pi_sequence(cols: &[ColumnStochasticMatrix]) -> Result<Vec<StochasticVector>, MixingError> {
    let Some(first) = cols.first() else {
        return Err(MixingError::DimensionMismatch { expected: 1, found: 0 });
    };
    let n = first.size();
    let mut out = Vec::with_capacity(cols.len() + 1);
    out.push(StochasticVector::uniform(n));
    for b in cols {
        if b.size() != n {
            return Err(MixingError::DimensionMismatch { expected: n, found: b.size() });
        }
        let next = b.apply(out.last().expect("non-empty").values());
        out.push(StochasticVector::new(next)?);
    }
    Ok(out)
}

/// Same as [`pi_sequence`] but allows an empty schedule given `n`.
pub fn pi_sequence_sized(n: usize, cols: &[ColumnStochasticMatrix]) -> Result<Vec<StochasticVector>, MixingError> {
    if cols.is_empty() {
        Ok(vec![StochasticVector::uniform(n)])
    } else {
        pi_sequence(cols)
    }
}

/// Backward recursion `phi_K = terminal`, `phi_k = A_k^T phi_{k+1}`. Returns
/// `len + 1` vectors indexed by round.
pub fn phi_sequence(
    rows: &[RowStochasticMatrix],
    terminal: &StochasticVector,
) -> Result<Vec<StochasticVector>, MixingError> {
    let n = terminal.len();
    let mut out = vec![terminal.clone(); rows.len() + 1];
    for (k, a) in rows.iter().enumerate().rev() {
        if a.size() != n {
            return Err(MixingError::DimensionMismatch { expected: n, found: a.size() });
        }
        let prev = a.transpose_apply(out[k + 1].values());
        out[k] = StochasticVector::new(prev)?;
    }
    Ok(out)
}
