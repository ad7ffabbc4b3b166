//! Conjugate gradients, deflation and Krylov subspace recycling.

mod deflation;
mod pcg;

pub use deflation::{
    deflated_pcg, harmonic_ritz, project_initial, ritz_converged, update_basis, DeflationState,
    Strategy, RITZ_TOL,
};
pub use pcg::pcg;

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    /// `||r_k|| / ||r_0|| < tol`
    RelativeToInitial,
    /// `||r_k|| / ||b|| < tol`
    RelativeToRhs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub kind: StopKind,
    pub tol: f64,
    pub max_iters: usize,
}

impl StoppingRule {
    pub fn new(kind: StopKind, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        Self {
            kind,
            tol,
            max_iters: 500,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Absolute residual norm the iteration has to get below.
    pub fn threshold(&self, r0_norm: f64, b_norm: f64) -> f64 {
        match self.kind {
            StopKind::RelativeToInitial => self.tol * r0_norm,
            StopKind::RelativeToRhs => self.tol * b_norm,
        }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self::new(StopKind::RelativeToRhs, 1e-6)
    }
}

/// Whether the residual norm `rk_norm` satisfies `rule`.
pub fn check_stop(rk_norm: f64, r0_norm: f64, b_norm: f64, rule: &StoppingRule) -> bool {
    rk_norm == 0.0 || rk_norm < rule.threshold(r0_norm, b_norm)
}

/// Outcome of one (deflated) PCG solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Recurrence residual norms `||r_0||, ..., ||r_k||`.
    pub residual_history: Vec<f64>,
    /// `||b - A x_0||` after the initial projection.
    pub initial_residual: f64,
    /// True residual `||b - A x||` recomputed at exit.
    pub final_residual: f64,
    pub rhs_norm: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Columns of the deflation basis used for this solve.
    pub deflation_size: usize,
    /// Wall time of the solve; filled in by the caller, the core has no clock.
    pub total_time_s: f64,
    pub time_per_iteration_s: f64,
    pub ritz_frozen_at_step: Option<usize>,
}

impl SolveReport {
    pub fn relres_initial(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.initial_residual / self.rhs_norm
        } else {
            0.0
        }
    }

    pub fn relres_final(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.final_residual / self.rhs_norm
        } else {
            0.0
        }
    }
}
