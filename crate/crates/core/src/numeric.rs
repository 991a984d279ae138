//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Sequences longer than this are accumulated with Neumaier compensation.
pub const COMPENSATION_THRESHOLD: usize = 64;

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Scalar accumulator that compensates only when asked to.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Accumulator {
    Plain(f64),
    Compensated(CompensatedSum),
}

impl Accumulator {
    pub(crate) fn new(compensated: bool) -> Self {
        if compensated {
            Accumulator::Compensated(CompensatedSum::default())
        } else {
            Accumulator::Plain(0.0)
        }
    }

    pub(crate) fn add(&mut self, x: f64) {
        match self {
            Accumulator::Plain(s) => *s += x,
            Accumulator::Compensated(c) => c.add(x),
        }
    }

    pub(crate) fn value(&self) -> f64 {
        match self {
            Accumulator::Plain(s) => *s,
            Accumulator::Compensated(c) => c.value(),
        }
    }
}

/// Component-wise accumulator for vectors.
#[derive(Debug, Clone)]
pub(crate) struct VectorAccumulator {
    parts: Vec<Accumulator>,
}

impl VectorAccumulator {
    pub(crate) fn new(dim: usize, compensated: bool) -> Self {
        Self {
            parts: vec![Accumulator::new(compensated); dim],
        }
    }

    pub(crate) fn add(&mut self, v: &DVector<f64>) {
        for (acc, x) in self.parts.iter_mut().zip(v.iter()) {
            acc.add(*x);
        }
    }

    pub(crate) fn value(&self) -> DVector<f64> {
        DVector::from_iterator(self.parts.len(), self.parts.iter().map(Accumulator::value))
    }
}

/// `vᵀ M v`.
pub fn quad_form(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Vertical stack of matrices with a common column count.
pub fn vstack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.first().map_or(0, |p| p.ncols());
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        debug_assert_eq!(p.ncols(), cols);
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}
