//! Two-level BDDC preconditioner for the interface Schur complement.
//!
//! Coarse degrees of freedom are point values at corners and weighted
//! averages over faces (inter-subdomain edges in 2D). Face rows are kept
//! orthonormal within each face, so every subdomain sharing a face sees the
//! same functionals and the coarse unknowns stay globally consistent.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{contract, Error, Result};
use crate::linalg::{
    dot, factorize_spd, DenseLu, DenseMatrix, SparseMatrix, SpdFactorization, TripletBuilder,
};
use crate::mesh::{DofMap, Mesh, Partition};
use crate::operator::LinearOperator;
use crate::par;
use crate::substructure::{InterfaceMap, SubdomainData};

/// Relative norm below which a new face row is considered dependent.
pub const ROW_DROP_TOL: f64 = 1e-12;

/// Interface unknowns shared by exactly two subdomains `s < t`, corners
/// excluded, with the orthonormal constraint rows defined on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub s: usize,
    pub t: usize,
    /// Global interface indices, ascending.
    pub dofs: Vec<usize>,
    /// Orthonormal rows over `dofs`; the first one is the arithmetic average.
    pub rows: Vec<Vec<f64>>,
    /// How many of `rows` came from adaptive enrichment.
    pub n_adaptive: usize,
}

impl Face {
    /// Orthonormalizes `row` against the existing rows and appends it.
    /// Returns `false` when the row is dependent and dropped.
    pub fn push_row(&mut self, row: &[f64]) -> bool {
        assert_eq!(row.len(), self.dofs.len());
        let norm0 = libm::sqrt(dot(row, row));
        if norm0 == 0.0 {
            return false;
        }
        let mut v: Vec<f64> = row.iter().map(|x| x / norm0).collect();
        for _ in 0..2 {
            for r in &self.rows {
                let c = dot(r, &v);
                v.iter_mut().zip(r).for_each(|(vi, ri)| *vi -= c * ri);
            }
        }
        let norm = libm::sqrt(dot(&v, &v));
        if norm < ROW_DROP_TOL {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        self.rows.push(v);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseKind {
    Corner,
    FaceAverage,
    Adaptive,
}

/// One global coarse degree of freedom: a functional on interface values.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseDof {
    pub kind: CoarseKind,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Subdomains that carry this coarse dof, ascending.
    pub owners: Vec<usize>,
}

/// Coarse space constraints before factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseConstraints {
    /// Corner interface indices, ascending.
    pub corners: Vec<usize>,
    pub faces: Vec<Face>,
    n_subdomains: usize,
    corner_owners: Vec<Vec<usize>>,
}

impl CoarseConstraints {
    /// Global coarse numbering: corners first, then each face's rows in
    /// face order.
    pub fn coarse_dofs(&self) -> Vec<CoarseDof> {
        let mut out = Vec::new();
        for (c, &g) in self.corners.iter().enumerate() {
            out.push(CoarseDof {
                kind: CoarseKind::Corner,
                support: vec![g],
                weights: vec![1.0],
                owners: self.corner_owners[c].clone(),
            });
        }
        for f in &self.faces {
            let n_base = f.rows.len() - f.n_adaptive;
            for (k, r) in f.rows.iter().enumerate() {
                out.push(CoarseDof {
                    kind: if k < n_base {
                        CoarseKind::FaceAverage
                    } else {
                        CoarseKind::Adaptive
                    },
                    support: f.dofs.clone(),
                    weights: r.clone(),
                    owners: vec![f.s, f.t],
                });
            }
        }
        out
    }

    pub fn n_coarse(&self) -> usize {
        self.corners.len() + self.faces.iter().map(|f| f.rows.len()).sum::<usize>()
    }

    pub fn n_adaptive(&self) -> usize {
        self.faces.iter().map(|f| f.n_adaptive).sum()
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_subdomains
    }

    /// Coarse dofs per subdomain.
    pub fn per_subdomain_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_subdomains];
        for d in self.coarse_dofs() {
            for &s in &d.owners {
                counts[s] += 1;
            }
        }
        counts
    }

    fn check_nonempty(&self) -> Result<()> {
        match self.per_subdomain_counts().iter().position(|&c| c == 0) {
            Some(s) => Err(Error::InsufficientCoarseDofs { subdomain: s }),
            None => Ok(()),
        }
    }
}

/// Selects corners and face averages.
///
/// Corners are interface nodes shared by three or more subdomains, plus
/// interface nodes on the subdomain-box corner lattice. The remaining
/// interface nodes are grouped by their pair of sharing subdomains; each
/// group is a face with one arithmetic-average row.
pub fn select_coarse_dofs(
    imap: &InterfaceMap,
    mesh: &Mesh,
    partition: &Partition,
    dof_map: &DofMap,
) -> Result<CoarseConstraints> {
    let mut corners = Vec::new();
    let mut corner_owners = Vec::new();
    let mut faces: Vec<Face> = Vec::new();
    for g in 0..imap.size() {
        let node = dof_map.dof_to_node[imap.dof(g)];
        let (i, j) = mesh.node_ij(node);
        let sharers = imap.sharers(g);
        if sharers.len() >= 3 || partition.on_corner_lattice(i, j) {
            corners.push(g);
            corner_owners.push(sharers.to_vec());
            continue;
        }
        let (s, t) = (sharers[0], sharers[1]);
        match faces.iter_mut().find(|f| f.s == s && f.t == t) {
            Some(f) => f.dofs.push(g),
            None => faces.push(Face {
                s,
                t,
                dofs: vec![g],
                rows: Vec::new(),
                n_adaptive: 0,
            }),
        }
    }
    faces.sort_by_key(|f| (f.s, f.t));
    for f in &mut faces {
        let avg = vec![1.0; f.dofs.len()];
        f.push_row(&avg);
    }
    let c = CoarseConstraints {
        corners,
        faces,
        n_subdomains: imap.n_subdomains(),
        corner_owners,
    };
    c.check_nonempty()?;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// Inverse number of sharing subdomains.
    Card,
    /// Share of the subdomain's stiffness diagonal.
    Diag,
}

/// Per-subdomain diagonal interface weights `D_i`.
#[derive(Debug, Clone)]
pub struct InterfaceWeights {
    pub scheme: WeightScheme,
    /// Indexed like each subdomain's local interface.
    pub d: Vec<Vec<f64>>,
}

pub fn build_weights(
    subs: &[SubdomainData],
    imap: &InterfaceMap,
    scheme: WeightScheme,
) -> Result<InterfaceWeights> {
    let d = match scheme {
        WeightScheme::Card => subs
            .iter()
            .map(|sub| {
                imap.local(sub.id)
                    .iter()
                    .map(|&g| 1.0 / imap.multiplicity(g) as f64)
                    .collect()
            })
            .collect(),
        WeightScheme::Diag => {
            let local_diag: Vec<Vec<f64>> = subs
                .iter()
                .map(|sub| {
                    let off = sub.interface_offset();
                    (0..sub.n_interface())
                        .map(|k| sub.k_local().get(off + k, off + k))
                        .collect()
                })
                .collect();
            let mut total = vec![0.0; imap.size()];
            for (sub, dg) in subs.iter().zip(&local_diag) {
                if dg.contains(&0.0) {
                    return Err(contract("zero stiffness diagonal on the interface"));
                }
                imap.scatter_add(sub.id, dg, &mut total);
            }
            subs.iter()
                .zip(local_diag)
                .map(|(sub, dg)| {
                    imap.local(sub.id)
                        .iter()
                        .zip(dg)
                        .map(|(&g, v)| v / total[g])
                        .collect()
                })
                .collect()
        }
    };
    Ok(InterfaceWeights { scheme, d })
}

#[derive(Debug, Clone)]
struct LocalProblem {
    n_local: usize,
    n_interior: usize,
    saddle: DenseLu,
    /// Global ids of the coarse dofs this subdomain carries.
    coarse_ids: Vec<usize>,
    /// Coarse basis, `n_local x coarse_ids.len()`.
    phi: DenseMatrix,
    constraints: DenseMatrix,
}

/// Set-up two-level BDDC preconditioner.
#[derive(Debug, Clone)]
pub struct Bddc {
    imap: InterfaceMap,
    weights: InterfaceWeights,
    locals: Vec<LocalProblem>,
    coarse_matrix: SparseMatrix,
    coarse_factor: SpdFactorization,
}

/// Constraint matrix `C_i` of a subdomain in its local ordering.
fn local_constraints(
    sub: &SubdomainData,
    imap: &InterfaceMap,
    dofs: &[CoarseDof],
) -> (Vec<usize>, DenseMatrix) {
    let gamma = imap.local(sub.id);
    let ids: Vec<usize> = dofs
        .iter()
        .enumerate()
        .filter(|(_, d)| d.owners.binary_search(&sub.id).is_ok())
        .map(|(k, _)| k)
        .collect();
    let mut c = DenseMatrix::zeros(ids.len(), sub.n_local());
    for (row, &k) in ids.iter().enumerate() {
        for (&g, &w) in dofs[k].support.iter().zip(&dofs[k].weights) {
            let pos = gamma
                .binary_search(&g)
                .expect("coarse support outside subdomain");
            c[(row, sub.interface_offset() + pos)] = w;
        }
    }
    (ids, c)
}

fn setup_local(
    sub: &SubdomainData,
    imap: &InterfaceMap,
    dofs: &[CoarseDof],
) -> Result<LocalProblem> {
    let (coarse_ids, c) = local_constraints(sub, imap, dofs);
    let n = sub.n_local();
    let m = coarse_ids.len();
    let k = sub.k_local().to_dense();
    let mut saddle = DenseMatrix::zeros(n + m, n + m);
    for j in 0..n {
        for i in 0..n {
            saddle[(i, j)] = k[(i, j)];
        }
    }
    for r in 0..m {
        for j in 0..n {
            saddle[(n + r, j)] = c[(r, j)];
            saddle[(j, n + r)] = c[(r, j)];
        }
    }
    let saddle = DenseLu::factor(&saddle, 1e-12)
        .map_err(|_| Error::InsufficientCoarseDofs { subdomain: sub.id })?;
    let mut phi = DenseMatrix::zeros(n, m);
    let mut rhs = vec![0.0; n + m];
    for j in 0..m {
        rhs[n + j] = 1.0;
        let sol = saddle.solve(&rhs);
        phi.col_mut(j).copy_from_slice(&sol[..n]);
        rhs[n + j] = 0.0;
    }
    Ok(LocalProblem {
        n_local: n,
        n_interior: sub.n_interior(),
        saddle,
        coarse_ids,
        phi,
        constraints: c,
    })
}

/// Factorizes the local saddle-point systems, builds the coarse basis and
/// assembles and factorizes the coarse matrix
/// `K_C = sum_i R_Ci^T (Phi_i^T K_i Phi_i) R_Ci`.
pub fn bddc_setup(
    subs: &[SubdomainData],
    imap: &InterfaceMap,
    constraints: &CoarseConstraints,
    weights: &InterfaceWeights,
) -> Result<Bddc> {
    if weights.d.len() != subs.len() || constraints.n_subdomains() != subs.len() {
        return Err(contract(
            "weights or constraints do not match the subdomains",
        ));
    }
    constraints.check_nonempty()?;
    let dofs = constraints.coarse_dofs();
    let locals: Vec<LocalProblem> = par::map(subs, |sub| setup_local(sub, imap, &dofs))
        .into_iter()
        .collect::<Result<_>>()?;
    let n_coarse = dofs.len();
    let mut kb = TripletBuilder::new(n_coarse, n_coarse);
    for (sub, lp) in subs.iter().zip(&locals) {
        let k = sub.k_local().to_dense();
        let mut kc = lp.phi.tr_matmul(&k.matmul(&lp.phi));
        kc.symmetrize();
        for (a, &ga) in lp.coarse_ids.iter().enumerate() {
            for (b, &gb) in lp.coarse_ids.iter().enumerate() {
                kb.push(ga, gb, kc[(a, b)]);
            }
        }
    }
    let coarse_matrix = kb.build();
    let coarse_factor = factorize_spd(&coarse_matrix)?;
    Ok(Bddc {
        imap: imap.clone(),
        weights: weights.clone(),
        locals,
        coarse_matrix,
        coarse_factor,
    })
}

impl Bddc {
    pub fn coarse_matrix(&self) -> &SparseMatrix {
        &self.coarse_matrix
    }

    pub fn coarse_order(&self) -> usize {
        self.coarse_matrix.n_rows()
    }

    pub fn n_subdomains(&self) -> usize {
        self.locals.len()
    }

    /// Coarse basis `Phi_i` of subdomain `s` (local ordering).
    pub fn coarse_basis(&self, s: usize) -> &DenseMatrix {
        &self.locals[s].phi
    }

    /// Constraint matrix `C_i` of subdomain `s`.
    pub fn constraint_matrix(&self, s: usize) -> &DenseMatrix {
        &self.locals[s].constraints
    }

    pub fn coarse_ids(&self, s: usize) -> &[usize] {
        &self.locals[s].coarse_ids
    }

    pub fn weights(&self) -> &InterfaceWeights {
        &self.weights
    }

    /// `z = M^{-1} r`: weighted residual, independent constrained local
    /// corrections, then the coarse correction, averaged back.
    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        let ids: Vec<usize> = (0..self.locals.len()).collect();
        let phase1 = par::map(&ids, |&s| {
            let lp = &self.locals[s];
            let r_d: Vec<f64> = self
                .imap
                .restrict(s, r)
                .iter()
                .zip(&self.weights.d[s])
                .map(|(a, b)| a * b)
                .collect();
            let mut rhs = vec![0.0; lp.n_local + lp.coarse_ids.len()];
            rhs[lp.n_interior..lp.n_local].copy_from_slice(&r_d);
            let mut u = lp.saddle.solve(&rhs);
            u.truncate(lp.n_local);
            let g: Vec<f64> = (0..lp.coarse_ids.len())
                .map(|j| dot(&lp.phi.col(j)[lp.n_interior..], &r_d))
                .collect();
            (u, g)
        });
        let mut coarse_rhs = vec![0.0; self.coarse_order()];
        for (lp, (_, g)) in self.locals.iter().zip(&phase1) {
            for (&id, v) in lp.coarse_ids.iter().zip(g) {
                coarse_rhs[id] += v;
            }
        }
        let mut u_c = vec![0.0; coarse_rhs.len()];
        self.coarse_factor.solve_into(&coarse_rhs, &mut u_c);
        let phase2 = par::map(&ids, |&s| {
            let lp = &self.locals[s];
            let local_c: Vec<f64> = lp.coarse_ids.iter().map(|&id| u_c[id]).collect();
            let mut v = phase1[s].0.clone();
            let corr = lp.phi.mul_vec(&local_c);
            v.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
            v[lp.n_interior..]
                .iter()
                .zip(&self.weights.d[s])
                .map(|(a, b)| a * b)
                .collect::<Vec<f64>>()
        });
        z.iter_mut().for_each(|v| *v = 0.0);
        for (s, part) in phase2.iter().enumerate() {
            self.imap.scatter_add(s, part, z);
        }
    }
}

impl LinearOperator for Bddc {
    fn dim(&self) -> usize {
        self.imap.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}

/// `z = M^{-1} r` as a free function.
pub fn bddc_apply(p: &Bddc, r: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_len(p.dim(), r.len())?;
    let mut z = vec![0.0; r.len()];
    p.apply_into(r, &mut z);
    Ok(z)
}

/// Sizes of the coarse problem, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseDiagnostics {
    pub coarse_order: usize,
    pub n_corners: usize,
    pub n_faces: usize,
    pub n_adaptive: usize,
    pub per_subdomain: Vec<usize>,
}

pub fn diagnostics(c: &CoarseConstraints) -> CoarseDiagnostics {
    CoarseDiagnostics {
        coarse_order: c.n_coarse(),
        n_corners: c.corners.len(),
        n_faces: c.faces.len(),
        n_adaptive: c.n_adaptive(),
        per_subdomain: c.per_subdomain_counts(),
    }
}
