//! Dense symmetric and generalized symmetric-definite eigensolvers.
//!
//! The standard problem goes through Householder tridiagonalization followed
//! by the implicit QL iteration (the EISPACK `tred2`/`tql2` pair). The
//! generalized problem `A v = lambda (B + shift I) v` is reduced to standard
//! form with the Cholesky factor of the shifted `B`.

use alloc::vec;
use alloc::vec::Vec;

use super::{DenseCholesky, DenseMatrix};
use crate::error::{check_len, contract, Error, Result};

/// Eigenpairs sorted by descending eigenvalue; eigenvectors are the columns
/// of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

/// Householder reduction to tridiagonal form. On exit `v` holds the
/// orthogonal transformation, `d` the diagonal and `e` the subdiagonal
/// (in `e[1..]`).
fn tred2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += libm::fabs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal matrix, accumulating rotations into `v`.
fn tql2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigenNoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Makes the largest-magnitude entry of every column positive (first index
/// wins on ties).
fn fix_signs(vectors: &mut DenseMatrix) {
    for j in 0..vectors.n_cols() {
        let col = vectors.col_mut(j);
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if libm::fabs(*v) > libm::fabs(col[best]) {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn sort_descending(values: Vec<f64>, vectors: DenseMatrix) -> EigenDecomposition {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let values = idx.iter().map(|&i| values[i]).collect();
    let mut vectors = vectors.select_columns(&idx);
    fix_signs(&mut vectors);
    EigenDecomposition { values, vectors }
}

/// Eigen-decomposition of a symmetric matrix (only symmetric input is
/// meaningful; the matrix is symmetrized first).
pub fn sym_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = a.n_rows();
    check_len(n, a.n_cols())?;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let mut v = a.clone();
    v.symmetrize();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    Ok(sort_descending(d, v))
}

/// Solves `A v = lambda (B + shift I) v` for symmetric `A` and symmetric
/// positive semi-definite `B`.
///
/// Eigenvalues are returned in descending order with `(B + shift I)`-
/// orthonormal eigenvectors. Fails with [`Error::PencilNotDefinite`] when the
/// shifted `B` is not positive definite.
pub fn generalized_sym_eig(
    a: &DenseMatrix,
    b: &DenseMatrix,
    shift: f64,
) -> Result<EigenDecomposition> {
    let n = a.n_rows();
    check_len(n, a.n_cols())?;
    check_len(n, b.n_rows())?;
    check_len(n, b.n_cols())?;
    if shift < 0.0 {
        return Err(contract("eigen shift must be nonnegative"));
    }
    let mut bs = b.clone();
    bs.symmetrize();
    for i in 0..n {
        bs[(i, i)] += shift;
    }
    let chol = DenseCholesky::factor(&bs).map_err(|_| Error::PencilNotDefinite)?;
    // C = L^{-1} A L^{-T}
    let mut c = a.clone();
    for j in 0..n {
        chol.solve_lower(c.col_mut(j));
    }
    let mut c = c.transpose();
    for j in 0..n {
        chol.solve_lower(c.col_mut(j));
    }
    let std = sym_eig(&c)?;
    let mut vectors = std.vectors;
    for j in 0..n {
        chol.solve_upper(vectors.col_mut(j));
    }
    fix_signs(&mut vectors);
    Ok(EigenDecomposition {
        values: std.values,
        vectors,
    })
}
