//! Right-hand-side sequences: synthetic transient and periodic generators,
//! and a small 2D incremental pressure-correction flow driver.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, contract, Error, Result};
use crate::krylov::{pcg, StopKind, StoppingRule};
use crate::linalg::{factorize_spd, norm2, SparseMatrix, SpdFactorization};
use crate::mesh::{
    assemble_laplacian, assemble_load, assemble_mass, assemble_stiffness, element_quadrature,
    BoundaryCondition, DofMap, Mesh,
};
use crate::operator::{Jacobi, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    SyntheticTransient,
    SyntheticPeriodic,
    Flow2d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub mode: SequenceMode,
    pub steps: usize,
    /// Decay length (in steps) of the transient perturbation.
    pub decay: f64,
    /// Size of the perturbation relative to the mean load.
    pub amplitude: f64,
    /// Period (in steps) of the periodic mode.
    pub period: usize,
    pub seed: u64,
}

impl SequenceConfig {
    pub fn new(mode: SequenceMode, steps: usize) -> Self {
        Self {
            mode,
            steps,
            decay: 30.0,
            amplitude: 1.0,
            period: 50,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(contract("a sequence needs at least one step"));
        }
        if !(self.decay > 0.0) || self.period == 0 {
            return Err(contract("decay and period must be positive"));
        }
        Ok(())
    }
}

/// Precomputed ingredients of a synthetic sequence (nodal vectors).
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    cfg: SequenceConfig,
    base: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

fn random_load(rng: &mut ChaCha8Rng, n: usize, target_norm: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = target_norm / norm2(&g);
    g.iter_mut().for_each(|v| *v *= s);
    g
}

impl SyntheticSequence {
    pub fn new(cfg: &SequenceConfig, mesh: &Mesh) -> Result<Self> {
        cfg.validate()?;
        if cfg.mode == SequenceMode::Flow2d {
            return Err(contract("flow sequences are produced by the flow driver"));
        }
        let base = assemble_load(mesh, |_, _| 1.0);
        let target = cfg.amplitude * norm2(&base);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let g1 = random_load(&mut rng, mesh.n_nodes(), target);
        let g2 = random_load(&mut rng, mesh.n_nodes(), target);
        Ok(Self {
            cfg: cfg.clone(),
            base,
            g1,
            g2,
        })
    }

    /// Limit `f_inf` of the transient mode and mean `f_0` of the periodic one.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn rhs(&self, step: usize) -> Vec<f64> {
        match self.cfg.mode {
            SequenceMode::SyntheticPeriodic => {
                let period = self.cfg.period;
                let phase = 2.0 * PI * (step % period) as f64 / period as f64;
                let (s, c) = (libm::sin(phase), libm::cos(phase));
                self.base
                    .iter()
                    .zip(self.g1.iter().zip(&self.g2))
                    .map(|(f, (a, b))| f + s * a + c * b)
                    .collect()
            }
            _ => {
                let e = libm::exp(-(step as f64) / self.cfg.decay);
                self.base
                    .iter()
                    .zip(&self.g1)
                    .map(|(f, g)| f + e * g)
                    .collect()
            }
        }
    }
}

/// Nodal right-hand side of step `step` of a synthetic sequence.
pub fn synthetic_rhs(cfg: &SequenceConfig, mesh: &Mesh, step: usize) -> Result<Vec<f64>> {
    if step >= cfg.steps {
        return Err(contract("step outside the sequence"));
    }
    Ok(SyntheticSequence::new(cfg, mesh)?.rhs(step))
}

/// Solver for the pressure-corrector Poisson problem on the equation
/// numbering of the pressure [`DofMap`].
pub trait PoissonSolver {
    fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>>;
}

/// Prescribed velocity on the boundary as a function of `(x, y, t)`.
pub type VelocityBc<'a> = &'a dyn Fn(f64, f64, f64) -> [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: [Vec<f64>; 2],
    pub p: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub nu: f64,
}

impl FlowState {
    pub fn at_rest(mesh: &Mesh, dt: f64, nu: f64) -> Result<Self> {
        if !(dt > 0.0) || !(nu > 0.0) {
            return Err(contract("dt and nu must be positive"));
        }
        let n = mesh.n_nodes();
        Ok(Self {
            u: [vec![0.0; n], vec![0.0; n]],
            p: vec![0.0; n],
            psi: vec![0.0; n],
            t: 0.0,
            dt,
            nu,
        })
    }
}

/// Matrices shared by all steps of a flow run.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    mesh: Mesh,
    dt: f64,
    nu: f64,
    mass: SparseMatrix,
    mass_factor: SpdFactorization,
    momentum: SparseMatrix,
    velocity_dofs: DofMap,
    momentum_free: SparseMatrix,
    pressure_bc: BoundaryCondition,
    pressure_dofs: DofMap,
    pressure_matrix: SparseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub momentum_iterations: [usize; 2],
    /// `||K psi - b|| / ||b||` of the corrector solve (zero for `b = 0`).
    pub corrector_residual: f64,
}

impl FlowProblem {
    /// Velocity is prescribed on the whole boundary; the corrector is
    /// pinned to zero where `pressure_bc` is Dirichlet.
    pub fn new(mesh: &Mesh, pressure_bc: BoundaryCondition, dt: f64, nu: f64) -> Result<Self> {
        if !(dt > 0.0) || !(nu > 0.0) {
            return Err(contract("dt and nu must be positive"));
        }
        let mass = assemble_mass(mesh);
        let mass_factor = factorize_spd(&mass)?;
        let stiff = assemble_stiffness(mesh);
        let n = mesh.n_nodes();
        // (1/dt) M + nu K; both share the Q1 pattern
        let vals: Vec<f64> = mass
            .values()
            .iter()
            .zip(stiff.values())
            .map(|(m, k)| m / dt + nu * k)
            .collect();
        let momentum = SparseMatrix::from_csr(
            n,
            n,
            mass.row_offsets().to_vec(),
            mass.col_indices().to_vec(),
            vals,
        )?;
        let mut vbc = BoundaryCondition::neumann(mesh);
        for node in 0..n {
            if mesh.is_boundary_node(node) {
                vbc.set_dirichlet(node, 0.0);
            }
        }
        let velocity_dofs = DofMap::new(&vbc);
        let momentum_free = momentum.submatrix(
            &velocity_dofs.dof_to_node,
            velocity_dofs.n_dofs(),
            &velocity_dofs.node_to_dof,
        );
        let (pressure_matrix, pressure_dofs) = assemble_laplacian(mesh, &pressure_bc)?;
        Ok(Self {
            mesh: mesh.clone(),
            dt,
            nu,
            mass,
            mass_factor,
            momentum,
            velocity_dofs,
            momentum_free,
            pressure_bc,
            pressure_dofs,
            pressure_matrix,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn pressure_matrix(&self) -> &SparseMatrix {
        &self.pressure_matrix
    }

    pub fn pressure_dofs(&self) -> &DofMap {
        &self.pressure_dofs
    }

    pub fn pressure_bc(&self) -> &BoundaryCondition {
        &self.pressure_bc
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }
}

/// `int phi_i div(u)` for a nodal velocity.
fn weak_divergence(mesh: &Mesh, u: &[Vec<f64>; 2]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_nodes()];
    for (e, nodes) in mesh.elements.iter().enumerate() {
        for q in element_quadrature(mesh, e) {
            let mut div = 0.0;
            for a in 0..4 {
                div += q.dphi_dx[a] * u[0][nodes[a]] + q.dphi_dy[a] * u[1][nodes[a]];
            }
            for a in 0..4 {
                b[nodes[a]] += q.weight * q.phi[a] * div;
            }
        }
    }
    b
}

/// Corrector load `b_i = -(1/dt) int phi_i div(u)` on all nodes.
pub fn divergence_load(mesh: &Mesh, u: &[Vec<f64>; 2], dt: f64) -> Result<Vec<f64>> {
    check_len(mesh.n_nodes(), u[0].len())?;
    check_len(mesh.n_nodes(), u[1].len())?;
    let mut b = weak_divergence(mesh, u);
    b.iter_mut().for_each(|v| *v *= -1.0 / dt);
    Ok(b)
}

/// Explicit momentum terms `int phi_i (u . grad) u_c` and `int phi_i d_c p`.
fn explicit_terms(mesh: &Mesh, u: &[Vec<f64>; 2], p: &[f64]) -> [Vec<f64>; 2] {
    let n = mesh.n_nodes();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for (e, nodes) in mesh.elements.iter().enumerate() {
        for q in element_quadrature(mesh, e) {
            let mut uq = [0.0; 2];
            let mut grad = [[0.0; 2]; 2];
            let mut gp = [0.0; 2];
            for a in 0..4 {
                let nd = nodes[a];
                for c in 0..2 {
                    uq[c] += q.phi[a] * u[c][nd];
                    grad[c][0] += q.dphi_dx[a] * u[c][nd];
                    grad[c][1] += q.dphi_dy[a] * u[c][nd];
                }
                gp[0] += q.dphi_dx[a] * p[nd];
                gp[1] += q.dphi_dy[a] * p[nd];
            }
            for c in 0..2 {
                let v = uq[0] * grad[c][0] + uq[1] * grad[c][1] + gp[c];
                for a in 0..4 {
                    out[c][nodes[a]] += q.weight * q.phi[a] * v;
                }
            }
        }
    }
    out
}

/// One pressure-correction step: momentum, corrector, pressure update.
pub fn flow_step(
    problem: &FlowProblem,
    state: &FlowState,
    velocity_bc: VelocityBc<'_>,
    poisson: &mut dyn PoissonSolver,
) -> Result<(FlowState, StepReport)> {
    let mesh = &problem.mesh;
    let n = mesh.n_nodes();
    for v in [&state.u[0], &state.u[1], &state.p, &state.psi] {
        check_len(n, v.len())?;
    }
    if state.dt != problem.dt || state.nu != problem.nu {
        return Err(contract("state and problem disagree on dt or nu"));
    }
    let dt = problem.dt;
    let umax = (0..n)
        .map(|i| libm::hypot(state.u[0][i], state.u[1][i]))
        .fold(0.0, f64::max);
    let h = mesh.hx().min(mesh.hy());
    if umax > 0.0 && dt > h / umax {
        return Err(Error::Cfl {
            dt,
            limit: h / umax,
        });
    }
    let t_new = state.t + dt;
    let p_lag: Vec<f64> = state.p.iter().zip(&state.psi).map(|(p, s)| p + s).collect();
    let explicit = explicit_terms(mesh, &state.u, &p_lag);
    let rule = StoppingRule::new(StopKind::RelativeToRhs, 1e-8).with_max_iters(1000);
    let jacobi = Jacobi::new(&problem.momentum_free);
    let vdofs = &problem.velocity_dofs;
    let mut u_new = [vec![0.0; n], vec![0.0; n]];
    let mut iters = [0; 2];
    for c in 0..2 {
        let mut lift = vec![0.0; n];
        for (node, slot) in vdofs.node_to_dof.iter().enumerate() {
            if slot.is_none() {
                let [x, y] = mesh.coords[node];
                lift[node] = velocity_bc(x, y, t_new)[c];
            }
        }
        let mu = problem.mass.apply_vec(&state.u[c]);
        let al = problem.momentum.apply_vec(&lift);
        let rhs: Vec<f64> = (0..n)
            .map(|i| mu[i] / dt - explicit[c][i] - al[i])
            .collect();
        let rhs = vdofs.restrict(&rhs);
        let x0 = vdofs.restrict(&state.u[c]);
        let (x, rep) = pcg(&problem.momentum_free, &jacobi, &rhs, &x0, &rule)?;
        if !rep.converged {
            return Err(Error::NotConverged {
                iterations: rep.iterations,
                residual: rep.final_residual,
            });
        }
        iters[c] = rep.iterations;
        u_new[c] = lift;
        for (d, &node) in vdofs.dof_to_node.iter().enumerate() {
            u_new[c][node] = x[d];
        }
    }
    let div = weak_divergence(mesh, &u_new);
    let load: Vec<f64> = div.iter().map(|v| -v / dt).collect();
    let b = problem.pressure_dofs.restrict(&load);
    let psi_dofs = poisson.solve(&b)?;
    check_len(b.len(), psi_dofs.len())?;
    let kpsi = problem.pressure_matrix.apply_vec(&psi_dofs);
    let b_norm = norm2(&b);
    let res: Vec<f64> = kpsi.iter().zip(&b).map(|(k, bi)| k - bi).collect();
    let corrector_residual = if b_norm > 0.0 {
        norm2(&res) / b_norm
    } else {
        norm2(&res)
    };
    let psi = problem
        .pressure_dofs
        .extend(&psi_dofs, &problem.pressure_bc);
    let mut proj = vec![0.0; n];
    problem.mass_factor.solve_into(&div, &mut proj);
    let p: Vec<f64> = (0..n)
        .map(|i| state.p[i] + psi[i] - problem.nu * proj[i])
        .collect();
    Ok((
        FlowState {
            u: u_new,
            p,
            psi,
            t: t_new,
            dt,
            nu: state.nu,
        },
        StepReport {
            momentum_iterations: iters,
            corrector_residual,
        },
    ))
}

/// Taylor-Green vortex on the unit square: exact velocity and pressure.
pub fn taylor_green_velocity(x: f64, y: f64, t: f64, nu: f64) -> [f64; 2] {
    let e = libm::exp(-2.0 * PI * PI * nu * t);
    [
        libm::sin(PI * x) * libm::cos(PI * y) * e,
        -libm::cos(PI * x) * libm::sin(PI * y) * e,
    ]
}

pub fn taylor_green_pressure(x: f64, y: f64, t: f64, nu: f64) -> f64 {
    let e = libm::exp(-4.0 * PI * PI * nu * t);
    0.25 * (libm::cos(2.0 * PI * x) + libm::cos(2.0 * PI * y)) * e
}
