//! The full pipeline for one sequence: substructuring and preconditioner
//! set up once, then one deflated PCG solve per right-hand side.

use alloc::vec;
use alloc::vec::Vec;

use crate::adaptive::{adaptive_setup, AdaptiveConfig, FaceReport};
use crate::bddc::{
    bddc_setup, build_weights, select_coarse_dofs, Bddc, CoarseConstraints, WeightScheme,
};
use crate::error::{check_len, Result};
use crate::flowseq::PoissonSolver;
use crate::krylov::{
    deflated_pcg, update_basis, DeflationState, SolveReport, StoppingRule, Strategy,
};
use crate::mesh::{BoundaryCondition, DofMap, Mesh, Partition};
use crate::substructure::{
    build_subdomains, condense_rhs, recover_interior, InterfaceMap, SchurOperator, SubdomainData,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rule: StoppingRule,
    pub warm_start: bool,
    pub strategy: Strategy,
    pub deflation_size: usize,
    pub weights: WeightScheme,
    pub adaptive: Option<AdaptiveConfig>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rule: StoppingRule::default(),
            warm_start: true,
            strategy: Strategy::None,
            deflation_size: 50,
            weights: WeightScheme::Card,
            adaptive: None,
        }
    }
}

pub struct SequenceSolver {
    cfg: SolverConfig,
    dof_map: DofMap,
    subs: Vec<SubdomainData>,
    imap: InterfaceMap,
    constraints: CoarseConstraints,
    face_reports: Vec<FaceReport>,
    bddc: Bddc,
    deflation: DeflationState,
    x_prev: Vec<f64>,
    setup_calls: usize,
    steps: usize,
    ritz_frozen_at: Option<usize>,
    last_report: Option<SolveReport>,
}

impl SequenceSolver {
    pub fn new(
        mesh: &Mesh,
        partition: &Partition,
        bc: &BoundaryCondition,
        cfg: SolverConfig,
    ) -> Result<Self> {
        let dof_map = DofMap::new(bc);
        let (subs, imap) = build_subdomains(mesh, partition, bc)?;
        let weights = build_weights(&subs, &imap, cfg.weights)?;
        let base = select_coarse_dofs(&imap, mesh, partition, &dof_map)?;
        let (bddc, constraints, face_reports) = match &cfg.adaptive {
            Some(acfg) => adaptive_setup(&subs, &imap, &weights, &base, acfg)?,
            None => (bddc_setup(&subs, &imap, &base, &weights)?, base, Vec::new()),
        };
        let n_gamma = imap.size();
        let deflation = DeflationState::new(n_gamma, cfg.strategy, cfg.deflation_size);
        Ok(Self {
            cfg,
            dof_map,
            subs,
            imap,
            constraints,
            face_reports,
            bddc,
            deflation,
            x_prev: vec![0.0; n_gamma],
            setup_calls: 1,
            steps: 0,
            ritz_frozen_at: None,
            last_report: None,
        })
    }

    /// Solves `K x = f` for one step; `f` and `x` use the equation
    /// numbering of [`SequenceSolver::dof_map`].
    pub fn solve(&mut self, f: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        check_len(self.dof_map.n_dofs(), f.len())?;
        let b = condense_rhs(&self.subs, &self.imap, f)?;
        let x0 = if self.cfg.warm_start {
            self.x_prev.clone()
        } else {
            vec![0.0; self.imap.size()]
        };
        let op = SchurOperator {
            subdomains: &self.subs,
            imap: &self.imap,
        };
        let (xg, mut report) = deflated_pcg(
            &op,
            &self.bddc,
            &mut self.deflation,
            &b,
            &x0,
            &self.cfg.rule,
        )?;
        self.steps += 1;
        let was_frozen = self.deflation.is_frozen();
        update_basis(&mut self.deflation, &self.bddc)?;
        if !was_frozen && self.deflation.is_frozen() {
            self.ritz_frozen_at = Some(self.steps);
        }
        report.ritz_frozen_at_step = self.ritz_frozen_at;
        let x = recover_interior(&self.subs, &self.imap, f, &xg)?;
        self.x_prev = xg;
        self.last_report = Some(report.clone());
        Ok((x, report))
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.dof_map
    }

    pub fn subdomains(&self) -> &[SubdomainData] {
        &self.subs
    }

    pub fn interface_map(&self) -> &InterfaceMap {
        &self.imap
    }

    pub fn constraints(&self) -> &CoarseConstraints {
        &self.constraints
    }

    pub fn face_reports(&self) -> &[FaceReport] {
        &self.face_reports
    }

    pub fn preconditioner(&self) -> &Bddc {
        &self.bddc
    }

    pub fn deflation(&self) -> &DeflationState {
        &self.deflation
    }

    /// How many times the substructures and preconditioner were built.
    pub fn setup_calls(&self) -> usize {
        self.setup_calls
    }

    pub fn steps_solved(&self) -> usize {
        self.steps
    }

    pub fn ritz_frozen_at(&self) -> Option<usize> {
        self.ritz_frozen_at
    }

    pub fn last_report(&self) -> Option<&SolveReport> {
        self.last_report.as_ref()
    }
}

impl PoissonSolver for SequenceSolver {
    fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        SequenceSolver::solve(self, rhs).map(|(x, _)| x)
    }
}
