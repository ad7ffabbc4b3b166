//! Envelope (skyline) Cholesky under a reverse Cuthill-McKee ordering.
//!
//! RCM keeps the profile of grid Laplacians narrow, so the envelope factor
//! has roughly `n * bandwidth` entries and the same code path serves both
//! the small interior blocks and the global direct solves used as
//! references.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::SparseMatrix;
use crate::error::{check_len, contract, Error, Result};

#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// First stored column of each (permuted) row of `L`.
    first: Vec<usize>,
    /// Offset of row `i` in `values`; row `i` spans columns `first[i]..=i`.
    start: Vec<usize>,
    values: Vec<f64>,
}

impl SpdFactorization {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Number of stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.values[self.start[i] + (j - self.first[i])]
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        // L y = Pb
        for i in 0..self.n {
            let mut s = y[i];
            let row = &self.values[self.start[i]..self.start[i] + (i - self.first[i])];
            for (k, &lik) in (self.first[i]..i).zip(row) {
                s -= lik * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        // L^T z = y, column-oriented on the row storage
        for i in (0..self.n).rev() {
            y[i] /= self.l(i, i);
            let yi = y[i];
            let row = &self.values[self.start[i]..self.start[i] + (i - self.first[i])];
            for (k, &lik) in (self.first[i]..i).zip(row) {
                y[k] -= lik * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub(crate) fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&j| j != v && !visited[j])
                .collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Factorizes a symmetric positive definite sparse matrix.
///
/// A non-positive pivot yields [`Error::NotSpd`] carrying the original row
/// index at which elimination broke down.
pub fn factorize_spd(a: &SparseMatrix) -> Result<SpdFactorization> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(contract("factorize_spd needs a square matrix"));
    }
    let perm = rcm_ordering(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..n).collect();
    for old in 0..n {
        let i = inv[old];
        for &oj in a.row(old).0 {
            let j = inv[oj];
            if j < i {
                first[i] = first[i].min(j);
            }
        }
    }
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        start[i + 1] = start[i] + (i - first[i] + 1);
    }
    let mut values = vec![0.0; start[n]];
    for old in 0..n {
        let i = inv[old];
        let (cols, vals) = a.row(old);
        for (&oj, &v) in cols.iter().zip(vals) {
            let j = inv[oj];
            if j <= i {
                values[start[i] + (j - first[i])] = v;
            }
        }
    }
    for i in 0..n {
        let fi = first[i];
        for j in fi..=i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let mut s = values[start[i] + (j - fi)];
            for k in k0..j {
                s -= values[start[i] + (k - fi)] * values[start[j] + (k - fj)];
            }
            if j < i {
                values[start[i] + (j - fi)] = s / values[start[j] + (j - fj)];
            } else {
                if !(s > 0.0) {
                    return Err(Error::NotSpd { pivot: perm[i] });
                }
                values[start[i] + (i - fi)] = libm::sqrt(s);
            }
        }
    }
    start.pop();
    Ok(SpdFactorization {
        n,
        perm,
        first,
        start,
        values,
    })
}

pub fn solve_factored(f: &SpdFactorization, b: &[f64]) -> Result<Vec<f64>> {
    check_len(f.order(), b.len())?;
    let mut x = vec![0.0; b.len()];
    f.solve_into(b, &mut x);
    Ok(x)
}
