//! Symmetric envelope ("skyline") storage and an in-place Cholesky factorization.
//!
//! Row `i` stores the lower-triangular entries `first[i]..=i`. Cholesky fill
//! never leaves the envelope, so smoothing problems ordered by time factor in
//! `O(n b²)` for bandwidth `b`.

use nalgebra::{DMatrix, DVector};

/// Pivots below `PIVOT_TOL` times the original diagonal are treated as rank loss.
pub const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SkylineMatrix {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineMatrix {
    /// Zero matrix with the given per-row first column (`first[i] <= i`).
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);
        Self {
            first,
            start,
            data: vec![0.0; total],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn first(&self, row: usize) -> usize {
        self.first[row]
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.first[i]);
        self.start[i] + (j - self.first[i])
    }

    /// Entry `(i, j)` of the symmetric matrix (zero outside the envelope).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if j < self.first[i] {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds to the lower-triangle entry `(i, j)`, `j <= i`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|i| self.get(i, i)))
    }

    pub fn add_diagonal(&mut self, d: &DVector<f64>) {
        for i in 0..self.dim() {
            self.add_lower(i, i, d[i]);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Lower Cholesky factor. Columns whose pivot collapses are dropped
    /// (their unknowns are pinned to zero) and reported in `deficient`.
    pub fn cholesky(&self) -> SkylineCholesky {
        let n = self.dim();
        let mut l = self.clone();
        let mut deficient = Vec::new();
        let mut dropped = vec![false; n];
        for i in 0..n {
            let fi = l.first[i];
            for j in fi..=i {
                let fj = l.first[j];
                let k0 = fi.max(fj);
                let ri = l.start[i] + (k0 - fi);
                let rj = l.start[j] + (k0 - fj);
                let len = j - k0;
                let dot: f64 = l.data[ri..ri + len]
                    .iter()
                    .zip(&l.data[rj..rj + len])
                    .map(|(a, b)| a * b)
                    .sum();
                let at = l.idx(i, j);
                let s = l.data[at] - dot;
                if j < i {
                    l.data[at] = if dropped[j] {
                        0.0
                    } else {
                        s / l.data[l.idx(j, j)]
                    };
                } else {
                    let scale = self.data[self.idx(i, i)].abs().max(f64::MIN_POSITIVE);
                    if s.is_nan() || s <= PIVOT_TOL * scale {
                        dropped[i] = true;
                        deficient.push(i);
                        l.data[at] = 1.0;
                    } else {
                        l.data[at] = s.sqrt();
                    }
                }
            }
        }
        SkylineCholesky {
            factor: l,
            dropped,
            deficient,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    factor: SkylineMatrix,
    dropped: Vec<bool>,
    deficient: Vec<usize>,
}

impl SkylineCholesky {
    /// Scalar columns whose pivot vanished.
    pub fn deficient(&self) -> &[usize] {
        &self.deficient
    }

    pub fn is_full_rank(&self) -> bool {
        self.deficient.is_empty()
    }

    /// Solves `A x = b`; dropped unknowns come back as zero.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let l = &self.factor;
        let n = l.dim();
        let mut y = b.clone();
        for i in 0..n {
            if self.dropped[i] {
                y[i] = 0.0;
                continue;
            }
            let fi = l.first[i];
            let row = &l.data[l.start[i]..l.start[i] + (i - fi)];
            let s: f64 = row
                .iter()
                .zip(y.rows(fi, i - fi).iter())
                .map(|(a, b)| a * b)
                .sum();
            y[i] = (y[i] - s) / l.data[l.idx(i, i)];
        }
        // Lᵀ x = y, column-oriented so the envelope rows can be reused.
        for i in (0..n).rev() {
            if self.dropped[i] {
                y[i] = 0.0;
                continue;
            }
            y[i] /= l.data[l.idx(i, i)];
            let xi = y[i];
            let fi = l.first[i];
            for j in fi..i {
                y[j] -= l.data[l.start[i] + (j - fi)] * xi;
            }
        }
        y
    }
}
