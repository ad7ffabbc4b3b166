use alloc::vec;
use alloc::vec::Vec;

use super::{check_stop, SolveReport, StoppingRule};
use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, norm2};
use crate::operator::LinearOperator;

pub(crate) fn true_residual(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.apply_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Closes a report: recomputes the true residual and rejects a converged
/// run whose true residual exceeds ten times the stopping threshold.
pub(crate) fn finish(
    a: &dyn LinearOperator,
    b: &[f64],
    x: &[f64],
    rule: &StoppingRule,
    mut report: SolveReport,
) -> Result<SolveReport> {
    report.final_residual = norm2(&true_residual(a, b, x));
    let threshold = rule.threshold(report.initial_residual, report.rhs_norm);
    if report.converged && report.final_residual > 10.0 * threshold && report.final_residual > 0.0 {
        return Err(Error::ResidualGap {
            true_residual: report.final_residual,
            threshold,
        });
    }
    Ok(report)
}

/// Preconditioned conjugate gradients (Hestenes-Stiefel recurrences).
///
/// The recurrence residual drives the stopping test. Hitting `max_iters`
/// is not an error; the report comes back with `converged == false`.
pub fn pcg(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    rule: &StoppingRule,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    check_len(n, b.len())?;
    check_len(n, x0.len())?;
    check_len(n, m.dim())?;
    let b_norm = norm2(b);
    let mut report = SolveReport {
        rhs_norm: b_norm,
        ..SolveReport::default()
    };
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        return Ok((vec![0.0; n], report));
    }
    let mut x = x0.to_vec();
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
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=rule.max_iters {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        report.alphas.push(alpha);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
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
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let report = finish(a, b, &x, rule, report)?;
    Ok((x, report))
}
