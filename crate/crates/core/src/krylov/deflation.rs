use alloc::vec;
use alloc::vec::Vec;

use super::pcg::{finish, true_residual};
use super::{check_stop, SolveReport, StoppingRule};
use crate::error::{check_len, contract, Error, Result};
use crate::linalg::{axpy, dot, generalized_sym_eig, norm2, DenseCholesky, DenseMatrix};
use crate::operator::LinearOperator;

/// Relative change of the Ritz values below which the recycled basis is frozen.
pub const RITZ_TOL: f64 = 1e-5;

/// How the deflation basis evolves along a sequence of systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    None,
    /// Keep the first `R` search directions, then freeze.
    B1,
    /// Keep the `R` most recent search directions.
    B2,
    /// Harmonic Ritz vectors for the `R` smallest values.
    B3,
    /// Harmonic Ritz vectors for the `R` largest values.
    B4,
}

#[derive(Debug, Clone)]
enum Gram {
    Empty,
    Diagonal(Vec<f64>),
    Full(DenseCholesky),
}

/// Deflation basis `W`, its image `AW` and the search directions of the
/// last solve, carried from one system of a sequence to the next.
#[derive(Debug, Clone)]
pub struct DeflationState {
    strategy: Strategy,
    max_size: usize,
    n: usize,
    w: DenseMatrix,
    aw: DenseMatrix,
    minv_aw: Option<DenseMatrix>,
    gram: Gram,
    wtw: Option<DenseCholesky>,
    p: DenseMatrix,
    ap: DenseMatrix,
    theta_prev: Vec<f64>,
    theta_curr: Vec<f64>,
    frozen: bool,
    updates: usize,
    reorthogonalize: bool,
}

impl DeflationState {
    pub fn new(n: usize, strategy: Strategy, max_size: usize) -> Self {
        Self {
            strategy,
            max_size,
            n,
            w: DenseMatrix::empty(n),
            aw: DenseMatrix::empty(n),
            minv_aw: None,
            gram: Gram::Empty,
            wtw: None,
            p: DenseMatrix::empty(n),
            ap: DenseMatrix::empty(n),
            theta_prev: Vec::new(),
            theta_curr: Vec::new(),
            frozen: false,
            updates: 0,
            reorthogonalize: true,
        }
    }

    /// State with a prescribed basis `W`; `AW` and `W^T A W` are formed here.
    pub fn with_basis(a: &dyn LinearOperator, w: DenseMatrix, strategy: Strategy) -> Result<Self> {
        check_len(a.dim(), w.n_rows())?;
        let mut state = Self::new(w.n_rows(), strategy, w.n_cols().max(1));
        let mut aw = DenseMatrix::zeros(w.n_rows(), w.n_cols());
        for j in 0..w.n_cols() {
            a.apply(w.col(j), aw.col_mut(j));
        }
        state.set_basis(w, aw, false)?;
        Ok(state)
    }

    /// Turns the residual reorthogonalization against `W` on or off.
    pub fn set_reorthogonalize(&mut self, on: bool) {
        self.reorthogonalize = on;
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn size(&self) -> usize {
        self.w.n_cols()
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn basis_image(&self) -> &DenseMatrix {
        &self.aw
    }

    /// Search directions of the most recent solve.
    pub fn search_directions(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Number of completed calls to [`update_basis`].
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Ritz values attached to the current basis (B3/B4 only).
    pub fn ritz_values(&self) -> &[f64] {
        &self.theta_curr
    }

    pub fn previous_ritz_values(&self) -> &[f64] {
        &self.theta_prev
    }

    fn set_basis(&mut self, w: DenseMatrix, aw: DenseMatrix, diagonal: bool) -> Result<()> {
        let k = w.n_cols();
        if k == 0 {
            self.gram = Gram::Empty;
            self.wtw = None;
        } else {
            self.gram = if diagonal {
                let d: Vec<f64> = (0..k).map(|j| dot(w.col(j), aw.col(j))).collect();
                if d.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::RankDeficientBasis);
                }
                Gram::Diagonal(d)
            } else {
                let mut g = w.tr_matmul(&aw);
                g.symmetrize();
                Gram::Full(DenseCholesky::factor(&g).map_err(|_| Error::RankDeficientBasis)?)
            };
            let wtw = w.tr_matmul(&w);
            self.wtw = Some(DenseCholesky::factor(&wtw).map_err(|_| Error::RankDeficientBasis)?);
        }
        self.w = w;
        self.aw = aw;
        Ok(())
    }

    /// `(W^T A W)^{-1} v`
    fn gram_solve(&self, v: &[f64]) -> Vec<f64> {
        match &self.gram {
            Gram::Empty => Vec::new(),
            Gram::Diagonal(d) => v.iter().zip(d).map(|(x, di)| x / di).collect(),
            Gram::Full(c) => c.solve(v),
        }
    }

    /// `r -= W (W^T W)^{-1} W^T r`
    fn reorthogonalize_residual(&self, r: &mut [f64]) {
        if let Some(c) = &self.wtw {
            let y = c.solve(&self.w.tr_mul_vec(r));
            let wy = self.w.mul_vec(&y);
            axpy(-1.0, &wy, r);
        }
    }

    /// `Q z = z - W (W^T A W)^{-1} (AW)^T z`, the part of `z` that is
    /// `A`-orthogonal to the basis.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut p = z.to_vec();
        if self.size() > 0 {
            let mu = self.gram_solve(&self.aw.tr_mul_vec(z));
            axpy(-1.0, &self.w.mul_vec(&mu), &mut p);
        }
        p
    }

    fn clear_directions(&mut self) {
        self.p = DenseMatrix::empty(self.n);
        self.ap = DenseMatrix::empty(self.n);
    }
}

/// Initial guess `x_0 = x_{-1} + W (W^T A W)^{-1} W^T (b - A x_{-1})`.
pub fn project_initial(
    state: &DeflationState,
    a: &dyn LinearOperator,
    b: &[f64],
    x_prev: &[f64],
) -> Result<Vec<f64>> {
    check_len(state.n, a.dim())?;
    check_len(state.n, b.len())?;
    check_len(state.n, x_prev.len())?;
    let mut x = x_prev.to_vec();
    if state.size() == 0 {
        return Ok(x);
    }
    let r = true_residual(a, b, &x);
    let y = state.gram_solve(&state.w.tr_mul_vec(&r));
    axpy(1.0, &state.w.mul_vec(&y), &mut x);
    Ok(x)
}

/// Deflated preconditioned conjugate gradients.
///
/// Search directions are kept `A`-orthogonal to the columns of `W`, and the
/// directions of this solve are stored in `state` for [`update_basis`].
/// With an empty basis the iteration is plain PCG.
pub fn deflated_pcg(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    state: &mut DeflationState,
    b: &[f64],
    x_prev: &[f64],
    rule: &StoppingRule,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    check_len(n, m.dim())?;
    check_len(n, b.len())?;
    check_len(n, x_prev.len())?;
    check_len(n, state.n)?;
    state.clear_directions();
    let b_norm = norm2(b);
    let mut report = SolveReport {
        rhs_norm: b_norm,
        deflation_size: state.size(),
        ..SolveReport::default()
    };
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok((vec![0.0; n], report));
    }
    let deflate = state.size() > 0;
    let mut x = project_initial(state, a, b, x_prev)?;
    let mut r = true_residual(a, b, &x);
    let r0 = norm2(&r);
    report.initial_residual = r0;
    report.residual_history.push(r0);
    if check_stop(r0, r0, b_norm, rule) {
        report.converged = true;
        let report = finish(a, b, &x, rule, report)?;
        return Ok((x, report));
    }
    let mut z = m.apply_vec(&r);
    let mut p = state.project(&z);
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=rule.max_iters {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        state.p.push_col(&p);
        state.ap.push_col(&q);
        let alpha = rz / pq;
        report.alphas.push(alpha);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        if deflate && state.reorthogonalize {
            state.reorthogonalize_residual(&mut r);
        }
        let rk = norm2(&r);
        report.residual_history.push(rk);
        report.iterations = it;
        if check_stop(rk, r0, b_norm, rule) {
            report.converged = true;
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        report.betas.push(beta);
        rz = rz_new;
        let qz = state.project(&z);
        for (pi, qi) in p.iter_mut().zip(&qz) {
            *pi = qi + beta * *pi;
        }
    }
    let report = finish(a, b, &x, rule, report)?;
    Ok((x, report))
}

/// Harmonic Ritz pairs of `M^{-1} A` on the range of `V`:
/// `(AV)^T M^{-1} (AV) y = theta V^T (AV) y`.
///
/// `minv_av` is `M^{-1} A V`. Values come back in descending order and the
/// vectors satisfy `y^T V^T A V y = I`.
pub fn harmonic_ritz(
    v: &DenseMatrix,
    av: &DenseMatrix,
    minv_av: &DenseMatrix,
) -> Result<(Vec<f64>, DenseMatrix)> {
    let k = v.n_cols();
    if av.n_cols() != k || minv_av.n_cols() != k {
        return Err(contract("V, AV and M^-1 AV must have the same columns"));
    }
    let mut g1 = av.tr_matmul(minv_av);
    let mut g2 = v.tr_matmul(av);
    let mut s = vec![0.0; k];
    for (j, sj) in s.iter_mut().enumerate() {
        let d = g2[(j, j)];
        if !(d > 0.0) {
            return Err(Error::RankDeficientBasis);
        }
        *sj = 1.0 / libm::sqrt(d);
    }
    for j in 0..k {
        for i in 0..k {
            g1[(i, j)] *= s[i] * s[j];
            g2[(i, j)] *= s[i] * s[j];
        }
    }
    g1.symmetrize();
    g2.symmetrize();
    let eig = match generalized_sym_eig(&g1, &g2, 0.0) {
        Ok(e) => e,
        Err(Error::PencilNotDefinite) => {
            let shift = 1e-12 * g2.trace() / k as f64;
            generalized_sym_eig(&g1, &g2, shift).map_err(|_| Error::RankDeficientBasis)?
        }
        Err(e) => return Err(e),
    };
    let mut y = eig.vectors;
    for j in 0..k {
        for i in 0..k {
            y[(i, j)] *= s[i];
        }
    }
    Ok((eig.values, y))
}

/// `||theta - theta_prev|| / ||theta|| <= RITZ_TOL`; false when the two
/// sets have different sizes.
pub fn ritz_converged(theta: &[f64], theta_prev: &[f64]) -> bool {
    if theta.is_empty() || theta.len() != theta_prev.len() {
        return false;
    }
    let diff: f64 = theta
        .iter()
        .zip(theta_prev)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let nt = norm2(theta);
    nt > 0.0 && libm::sqrt(diff) <= RITZ_TOL * nt
}

/// Builds the basis for the next system from `W` and the search directions
/// of the last solve. `m` is only applied by the Ritz strategies.
pub fn update_basis(state: &mut DeflationState, m: &dyn LinearOperator) -> Result<()> {
    check_len(state.n, m.dim())?;
    let result = update_inner(state, m);
    state.clear_directions();
    state.updates += 1;
    result
}

/// Relative `A`-norm below which an orthogonalized search direction is
/// dropped from a B1/B2 basis.
pub const DROP_TOL: f64 = 1e-1;

fn update_inner(state: &mut DeflationState, m: &dyn LinearOperator) -> Result<()> {
    if state.frozen || state.strategy == Strategy::None || state.max_size == 0 {
        return Ok(());
    }
    let r = state.max_size;
    match state.strategy {
        Strategy::None => Ok(()),
        Strategy::B1 => {
            let (p, ap) = a_orthogonalize(&state.w, &state.aw, &state.p, &state.ap);
            let take = r.saturating_sub(state.size()).min(p.n_cols());
            if take > 0 {
                let w = state.w.hcat(&p.columns(0..take));
                let aw = state.aw.hcat(&ap.columns(0..take));
                state.set_basis(w, aw, true)?;
            }
            if state.size() >= r {
                state.frozen = true;
            }
            Ok(())
        }
        Strategy::B2 => {
            let (p, ap) = a_orthogonalize(&state.w, &state.aw, &state.p, &state.ap);
            if p.n_cols() == 0 {
                return Ok(());
            }
            let v = state.w.hcat(&p);
            let av = state.aw.hcat(&ap);
            let start = v.n_cols().saturating_sub(r);
            state.set_basis(
                v.columns(start..v.n_cols()),
                av.columns(start..av.n_cols()),
                true,
            )
        }
        Strategy::B3 | Strategy::B4 => {
            let v = state.w.hcat(&state.p);
            if v.n_cols() == 0 {
                return Ok(());
            }
            let av = state.aw.hcat(&state.ap);
            let minv_aw = match state.minv_aw.take() {
                Some(c) if c.n_cols() == state.size() => c,
                _ => apply_columns(m, &state.aw),
            };
            let minv_av = minv_aw.hcat(&apply_columns(m, &state.ap));
            let (theta, y) = harmonic_ritz(&v, &av, &minv_av)?;
            let k = theta.len();
            let keep = r.min(k);
            let idx: Vec<usize> = if state.strategy == Strategy::B4 {
                (0..keep).collect()
            } else {
                (0..keep).map(|i| k - 1 - i).collect()
            };
            let ys = y.select_columns(&idx);
            let w = v.matmul(&ys);
            let aw = av.matmul(&ys);
            state.minv_aw = Some(minv_av.matmul(&ys));
            state.set_basis(w, aw, false)?;
            state.theta_prev = core::mem::take(&mut state.theta_curr);
            state.theta_curr = idx.iter().map(|&i| theta[i]).collect();
            if ritz_converged(&state.theta_curr, &state.theta_prev) {
                state.frozen = true;
            }
            Ok(())
        }
    }
}

/// `A`-orthogonalizes the columns of `p` against `w` and against each other
/// and scales them to unit `A`-norm, updating `ap` alongside. In exact
/// arithmetic the directions of a deflated solve are already `A`-orthogonal;
/// this keeps the stored gram diagonal in floating point. A column that
/// loses more than [`DROP_TOL`] of its `A`-norm is numerically dependent and
/// its `ap` is no longer accurate, so it is dropped.
fn a_orthogonalize(
    w: &DenseMatrix,
    aw: &DenseMatrix,
    p: &DenseMatrix,
    ap: &DenseMatrix,
) -> (DenseMatrix, DenseMatrix) {
    let mut v = w.clone();
    let mut av = aw.clone();
    let d: Vec<f64> = (0..v.n_cols()).map(|i| dot(v.col(i), av.col(i))).collect();
    let mut d = d;
    for j in 0..p.n_cols() {
        let mut pj = p.col(j).to_vec();
        let mut apj = ap.col(j).to_vec();
        let before = dot(&pj, &apj);
        for _ in 0..2 {
            for i in 0..v.n_cols() {
                let c = dot(av.col(i), &pj) / d[i];
                axpy(-c, v.col(i), &mut pj);
                axpy(-c, av.col(i), &mut apj);
            }
        }
        let after = dot(&pj, &apj);
        if !(before > 0.0) || !(after > DROP_TOL * DROP_TOL * before) {
            continue;
        }
        let s = 1.0 / libm::sqrt(after);
        pj.iter_mut().for_each(|x| *x *= s);
        apj.iter_mut().for_each(|x| *x *= s);
        d.push(dot(&pj, &apj));
        v.push_col(&pj);
        av.push_col(&apj);
    }
    let k = w.n_cols();
    (v.columns(k..v.n_cols()), av.columns(k..av.n_cols()))
}

fn apply_columns(op: &dyn LinearOperator, x: &DenseMatrix) -> DenseMatrix {
    let mut y = DenseMatrix::zeros(x.n_rows(), x.n_cols());
    for j in 0..x.n_cols() {
        op.apply(x.col(j), y.col_mut(j));
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{pcg, StopKind};
    use crate::operator::Identity;

    fn laplace_1d(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn empty_basis_matches_pcg() {
        let a = laplace_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin() + 1.0).collect();
        let rule = StoppingRule::new(StopKind::RelativeToRhs, 1e-10);
        let (x1, r1) = pcg(&a, &Identity(30), &b, &[0.0; 30], &rule).unwrap();
        let mut st = DeflationState::new(30, Strategy::None, 0);
        let (x2, r2) = deflated_pcg(&a, &Identity(30), &mut st, &b, &[0.0; 30], &rule).unwrap();
        assert_eq!(r1.iterations, r2.iterations);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn b1_freezes_when_full() {
        let a = laplace_1d(20);
        let b = vec![1.0; 20];
        let rule = StoppingRule::new(StopKind::RelativeToRhs, 1e-8);
        let mut st = DeflationState::new(20, Strategy::B1, 3);
        deflated_pcg(&a, &Identity(20), &mut st, &b, &[0.0; 20], &rule).unwrap();
        update_basis(&mut st, &Identity(20)).unwrap();
        assert_eq!(st.size(), 3);
        assert!(st.is_frozen());
    }

    #[test]
    fn ritz_tolerance_edge() {
        assert!(!ritz_converged(&[2.0, 1.0], &[2.0, 1.0 + 3e-5]));
        assert!(ritz_converged(&[2.0, 1.0], &[2.0, 1.0 + 1e-6]));
        assert!(!ritz_converged(&[2.0], &[2.0, 1.0]));
    }
}
