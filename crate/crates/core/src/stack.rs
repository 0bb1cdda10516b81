//! Row-major storage for one `p`-dimensional vector per agent, plus the
//! handful of dense vector helpers the rest of the crate shares.
//!
//! All reductions iterate agents in index order so results are bit-for-bit
//! reproducible.

use std::fmt;

/// `n` stacked vectors of dimension `p`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct AgentStack {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl AgentStack {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, data: vec![0.0; n * p] }
    }

    /// Builds a stack from per-agent rows. Returns `None` if the rows are
    /// ragged or empty.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        let n = rows.len();
        let p = rows.first()?.as_ref().len();
        if p == 0 || rows.iter().any(|r| r.as_ref().len() != p) {
            return None;
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Some(Self { n, p, data })
    }

    /// Every agent holds a copy of `row`.
    pub fn repeated(n: usize, row: &[f64]) -> Self {
        let mut data = Vec::with_capacity(n * row.len());
        for _ in 0..n {
            data.extend_from_slice(row);
        }
        Self { n, p: row.len(), data }
    }

    pub fn from_flat(n: usize, p: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == n * p && n > 0 && p > 0).then_some(Self { n, p, data })
    }

    #[inline]
    pub fn agents(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Sum of all agent rows, accumulated in agent order.
    pub fn column_sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for row in self.rows() {
            axpy(1.0, row, &mut out);
        }
        out
    }

    /// Euclidean norm of the whole stack viewed as one `n*p` vector.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the first agent holding a non-finite coordinate.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.rows().position(|r| r.iter().any(|v| !v.is_finite()))
    }

    pub fn same_shape(&self, other: &AgentStack) -> bool {
        self.n == other.n && self.p == other.p
    }
}

impl fmt::Debug for AgentStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for row in self.rows() {
            list.entry(&row);
        }
        list.finish()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `out += scale * x`
#[inline]
pub fn axpy(scale: f64, x: &[f64], out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += scale * v;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
