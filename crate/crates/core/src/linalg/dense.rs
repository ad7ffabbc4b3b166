use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{check_len, Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for j in 0..n_cols {
            for i in 0..n_rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_column_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        check_len(n_rows * n_cols, values.len())?;
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Row-major literal, convenient in tests.
    pub fn from_rows(n_rows: usize, n_cols: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n_rows * n_cols);
        Self::from_fn(n_rows, n_cols, |i, j| rows[i * n_cols + j])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// An `n x 0` matrix, ready to have columns appended.
    pub fn empty(n_rows: usize) -> Self {
        Self::zeros(n_rows, 0)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn push_col(&mut self, col: &[f64]) {
        assert_eq!(col.len(), self.n_rows);
        self.values.extend_from_slice(col);
        self.n_cols += 1;
    }

    /// Keeps columns `range` only.
    pub fn columns(&self, range: core::ops::Range<usize>) -> Self {
        let n = self.n_rows;
        Self {
            n_rows: n,
            n_cols: range.len(),
            values: self.values[range.start * n..range.end * n].to_vec(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut m = Self::empty(self.n_rows);
        for &j in idx {
            m.push_col(self.col(j));
        }
        m
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.n_rows, other.n_rows);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols + other.n_cols,
            values,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)])
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                super::axpy(xj, self.col(j), &mut y);
            }
        }
        y
    }

    /// `y = A^T x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows);
        (0..self.n_cols)
            .map(|j| super::dot(self.col(j), x))
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows);
        let mut m = Self::zeros(self.n_rows, other.n_cols);
        for j in 0..other.n_cols {
            let c = self.mul_vec(other.col(j));
            m.col_mut(j).copy_from_slice(&c);
        }
        m
    }

    /// `A^T B`
    pub fn tr_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_rows, other.n_rows);
        Self::from_fn(self.n_cols, other.n_cols, |i, j| {
            super::dot(self.col(i), other.col(j))
        })
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut o = other.clone();
        o.scale(-1.0);
        self.add(&o)
    }

    /// Replaces `A` with `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.n_rows, self.n_cols);
        for j in 0..self.n_cols {
            for i in 0..j {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self[(i, i)])
            .sum()
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        super::norm2(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0, |m, v| f64::max(m, libm::fabs(*v)))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &self.values[j * self.n_rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &mut self.values[j * self.n_rows + i]
    }
}

/// Dense `L L^T` factorization; only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    l: DenseMatrix,
}

impl DenseCholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.n_rows();
        check_len(n, a.n_cols())?;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotSpd { pivot: j });
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn order(&self) -> usize {
        self.l.n_rows()
    }

    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let n = self.order();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let n = self.order();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// LU with partial pivoting, used for the bordered saddle-point systems.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Fails with [`Error::SingularMatrix`] when a pivot falls below
    /// `rel_tol * max|A|`.
    pub fn factor(a: &DenseMatrix, rel_tol: f64) -> Result<Self> {
        let n = a.n_rows();
        check_len(n, a.n_cols())?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = rel_tol * a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, libm::fabs(lu[(i, k)])))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > floor) {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj != 0.0 {
                    for i in k + 1..n {
                        lu[(i, j)] -= lu[(i, k)] * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..n {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in 0..j {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        x
    }
}
