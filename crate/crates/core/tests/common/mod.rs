//! Dense reference computations shared by the integration tests. Nothing
//! here calls the factorizations or eigensolvers under test.
#![allow(dead_code)]

use ddseq_core::linalg::{DenseMatrix, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn from_sparse(a: &SparseMatrix) -> Mat {
    let mut m = vec![vec![0.0; a.n_cols()]; a.n_rows()];
    for (i, row) in m.iter_mut().enumerate() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            row[j] = v;
        }
    }
    m
}

pub fn from_dense(a: &DenseMatrix) -> Mat {
    (0..a.n_rows())
        .map(|i| (0..a.n_cols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn to_dense(a: &Mat) -> DenseMatrix {
    DenseMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            for j in 0..m {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm(&d) / norm(y).max(f64::MIN_POSITIVE)
}

/// Gaussian elimination with partial pivoting; `b` may hold several
/// right-hand sides as columns.
pub fn gauss_solve_many(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut a = a.clone();
    let mut b = b.clone();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let piv = a[k][k];
        assert!(piv.abs() > 1e-300, "singular oracle matrix");
        for i in k + 1..n {
            let f = a[i][k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            for j in 0..m {
                b[i][j] -= f * b[k][j];
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for i in (0..n).rev() {
        for j in 0..m {
            let s: f64 = (i + 1..n).map(|l| a[i][l] * x[l][j]).sum();
            x[i][j] = (b[i][j] - s) / a[i][i];
        }
    }
    x
}

pub fn gauss_solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let bm: Mat = b.iter().map(|&v| vec![v]).collect();
    gauss_solve_many(a, &bm).into_iter().map(|r| r[0]).collect()
}

pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let id: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    gauss_solve_many(a, &id)
}

/// Cyclic Jacobi rotations; eigenvalues ascending, eigenvectors as columns.
pub fn jacobi_eig(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let vals = idx.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n)
        .map(|r| idx.iter().map(|&i| v[r][i]).collect())
        .collect();
    (vals, vecs)
}

/// Lower Cholesky factor by the textbook recurrence.
pub fn cholesky(a: &Mat) -> Mat {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let s: f64 = (0..j).map(|k| l[j][k] * l[j][k]).sum();
        let d = a[j][j] - s;
        assert!(d > 0.0, "oracle Cholesky: not SPD");
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = (a[i][j] - s) / l[j][j];
        }
    }
    l
}

/// Eigenvalues of `M^{-1} A` for SPD `A` and SPD preconditioner action
/// `Minv = M^{-1}`: `eig(L^T A L)` with `Minv = L L^T`. Ascending.
pub fn preconditioned_spectrum(a: &Mat, minv: &Mat) -> Vec<f64> {
    let mut ms = minv.clone();
    symmetrize(&mut ms);
    let l = cholesky(&ms);
    let c = matmul(&transpose(&l), &matmul(a, &l));
    let mut c = c;
    symmetrize(&mut c);
    jacobi_eig(&c).0
}

pub fn symmetrize(a: &mut Mat) {
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
}

/// Dense Schur complement `A_GG - A_GI A_II^{-1} A_IG` of `a` with respect
/// to the index set `gamma`.
pub fn schur(a: &Mat, gamma: &[usize]) -> Mat {
    let n = a.len();
    let interior: Vec<usize> = (0..n).filter(|i| !gamma.contains(i)).collect();
    let sub = |rows: &[usize], cols: &[usize]| -> Mat {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| a[i][j]).collect())
            .collect()
    };
    let agg = sub(gamma, gamma);
    if interior.is_empty() {
        return agg;
    }
    let aii = sub(&interior, &interior);
    let aig = sub(&interior, gamma);
    let agi = sub(gamma, &interior);
    let y = gauss_solve_many(&aii, &aig);
    let t = matmul(&agi, &y);
    agg.iter()
        .zip(&t)
        .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random orthogonal matrix from Gram-Schmidt on a random square matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut v = random_vec(rng, n);
        for _ in 0..2 {
            for c in &cols {
                let d = dot(&v, c);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            cols.push(v);
        }
    }
    transpose(&cols)
}

/// `Q diag(lambda) Q^T` with the orthogonal `Q` returned alongside.
pub fn spd_with_spectrum(rng: &mut ChaCha8Rng, lambda: &[f64]) -> (Mat, Mat) {
    let n = lambda.len();
    let q = random_orthogonal(rng, n);
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..n).map(|k| q[i][k] * lambda[k] * q[j][k]).sum();
        }
    }
    symmetrize(&mut a);
    (a, q)
}

/// Spectrum log-uniform in `[1, kappa]`, ascending.
pub fn log_spectrum(rng: &mut ChaCha8Rng, n: usize, kappa: f64) -> Vec<f64> {
    let mut l: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => kappa,
            _ => kappa.powf(rng.gen_range(0.0..1.0)),
        })
        .collect();
    l.sort_by(|a, b| a.partial_cmp(b).unwrap());
    l
}
