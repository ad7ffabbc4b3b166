//! Adaptive enrichment of the BDDC coarse space.
//!
//! For every face shared by subdomains `s` and `t` we solve
//!
//! ```text
//! Pi (I - E)^T A_st (I - E) Pi w = lambda Pi A_st Pi w
//! ```
//!
//! on the joint interface space of the pair, where `A_st = diag(A_s, A_t)`
//! holds the local Schur complements, `E` averages the shared unknowns with
//! the preconditioner's weights and `Pi` projects onto functions whose
//! existing pair coarse dofs are continuous. Each eigenvector with
//! `lambda > tau` yields a new face constraint.

use alloc::vec;
use alloc::vec::Vec;

use crate::bddc::{bddc_setup, Bddc, CoarseConstraints, InterfaceWeights};
use crate::error::{contract, Error, Result};
use crate::linalg::{dot, generalized_sym_eig, DenseMatrix, EigenDecomposition};
use crate::par;
use crate::substructure::{InterfaceMap, SubdomainData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub tau: f64,
    pub max_vectors_per_face: usize,
    /// The singular right-hand pencil matrix `B` is shifted by
    /// `shift_factor * trace(B) / order`.
    pub shift_factor: f64,
}

impl AdaptiveConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 1.0) {
            return Err(contract("adaptive threshold tau must exceed 1"));
        }
        Ok(Self {
            tau,
            max_vectors_per_face: 10,
            shift_factor: 1e-10,
        })
    }

    pub fn with_max_vectors(mut self, n: usize) -> Self {
        self.max_vectors_per_face = n;
        self
    }
}

/// Dense pencil data for one face.
#[derive(Debug, Clone)]
pub struct FacePair {
    pub face: usize,
    pub s: usize,
    pub t: usize,
    /// Joint-space positions `(in s block, in t block)` of the face dofs,
    /// aligned with `Face::dofs`.
    pub face_positions: Vec<(usize, usize)>,
    /// Block-diagonal `diag(A_s, A_t)`.
    pub a_st: DenseMatrix,
    /// `I - E`
    pub jump: DenseMatrix,
    /// Orthogonal projection `Pi`.
    pub proj: DenseMatrix,
}

impl FacePair {
    pub fn order(&self) -> usize {
        self.a_st.n_rows()
    }

    /// Left-hand pencil matrix `Pi (I-E)^T A (I-E) Pi`.
    pub fn lhs(&self) -> DenseMatrix {
        let j = self.jump.matmul(&self.proj);
        let mut m = j.tr_matmul(&self.a_st.matmul(&j));
        m.symmetrize();
        m
    }

    /// Right-hand pencil matrix `Pi A Pi` (unshifted).
    pub fn rhs(&self) -> DenseMatrix {
        let mut m = self.proj.tr_matmul(&self.a_st.matmul(&self.proj));
        m.symmetrize();
        m
    }
}

fn position(list: &[usize], g: usize) -> usize {
    list.binary_search(&g)
        .expect("interface index not in subdomain")
}

/// Builds the pencil for face `face`. `schur` holds the dense local Schur
/// complement of every subdomain.
pub fn build_pair(
    face: usize,
    constraints: &CoarseConstraints,
    imap: &InterfaceMap,
    weights: &InterfaceWeights,
    schur: &[DenseMatrix],
) -> FacePair {
    let f = &constraints.faces[face];
    let (s, t) = (f.s, f.t);
    let (gs, gt) = (imap.local(s), imap.local(t));
    let (ns, nt) = (gs.len(), gt.len());
    let n = ns + nt;
    let mut a_st = DenseMatrix::zeros(n, n);
    for j in 0..ns {
        for i in 0..ns {
            a_st[(i, j)] = schur[s][(i, j)];
        }
    }
    for j in 0..nt {
        for i in 0..nt {
            a_st[(ns + i, ns + j)] = schur[t][(i, j)];
        }
    }
    // E averages every unknown shared by s and t with pair-normalized weights
    // and vanishes on the others
    let mut jump = DenseMatrix::zeros(n, n);
    for (ps, &g) in gs.iter().enumerate() {
        if let Ok(pt) = gt.binary_search(&g) {
            let (ws, wt) = (weights.d[s][ps], weights.d[t][pt]);
            let (ds, dt) = (ws / (ws + wt), wt / (ws + wt));
            let pt = ns + pt;
            jump[(ps, ps)] = 1.0 - ds;
            jump[(ps, pt)] = -dt;
            jump[(pt, ps)] = -ds;
            jump[(pt, pt)] = 1.0 - dt;
        }
    }
    // continuity of the coarse dofs carried by both subdomains
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for dof in constraints.coarse_dofs() {
        if dof.owners.binary_search(&s).is_err() || dof.owners.binary_search(&t).is_err() {
            continue;
        }
        let mut row = vec![0.0; n];
        for (&g, &w) in dof.support.iter().zip(&dof.weights) {
            row[position(gs, g)] += w;
            row[ns + position(gt, g)] -= w;
        }
        let norm0 = libm::sqrt(dot(&row, &row));
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &row);
                row.iter_mut().zip(q).for_each(|(r, qi)| *r -= c * qi);
            }
        }
        let norm = libm::sqrt(dot(&row, &row));
        if norm > 1e-12 * norm0 {
            row.iter_mut().for_each(|r| *r /= norm);
            basis.push(row);
        }
    }
    let mut proj = DenseMatrix::identity(n);
    for q in &basis {
        for j in 0..n {
            for i in 0..n {
                proj[(i, j)] -= q[i] * q[j];
            }
        }
    }
    let face_positions = f
        .dofs
        .iter()
        .map(|&g| (position(gs, g), ns + position(gt, g)))
        .collect();
    FacePair {
        face,
        s,
        t,
        face_positions,
        a_st,
        jump,
        proj,
    }
}

/// Full spectrum of the face pencil, descending.
pub fn pair_spectrum(pair: &FacePair, shift_factor: f64) -> Result<EigenDecomposition> {
    let lhs = pair.lhs();
    let rhs = pair.rhs();
    let n = pair.order();
    let shift = if n == 0 {
        0.0
    } else {
        shift_factor * rhs.trace() / n as f64
    };
    generalized_sym_eig(&lhs, &rhs, shift).map_err(|e| match e {
        Error::PencilNotDefinite => Error::PairPencil {
            s: pair.s,
            t: pair.t,
        },
        other => other,
    })
}

/// Eigenpairs with `lambda > tau`, largest first, at most
/// `max_vectors_per_face` of them.
pub fn pair_eigenproblem(pair: &FacePair, cfg: &AdaptiveConfig) -> Result<EigenDecomposition> {
    let full = pair_spectrum(pair, cfg.shift_factor)?;
    let keep: Vec<usize> = full
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &v)| v > cfg.tau)
        .map(|(i, _)| i)
        .take(cfg.max_vectors_per_face)
        .collect();
    Ok(EigenDecomposition {
        values: keep.iter().map(|&i| full.values[i]).collect(),
        vectors: full.vectors.select_columns(&keep),
    })
}

/// Face restriction of `c = w^T Pi (I-E)^T A (I-E) Pi`. On shared unknowns
/// the `s` and `t` parts of `c` are negatives of each other; we average
/// them as `(c_s - c_t) / 2`.
pub fn constraint_row(pair: &FacePair, lhs: &DenseMatrix, w: &[f64]) -> Option<Vec<f64>> {
    let c = lhs.mul_vec(w);
    let full = libm::sqrt(dot(&c, &c));
    let row: Vec<f64> = pair
        .face_positions
        .iter()
        .map(|&(ps, pt)| 0.5 * (c[ps] - c[pt]))
        .collect();
    let norm = libm::sqrt(dot(&row, &row));
    (full > 0.0 && norm > crate::bddc::ROW_DROP_TOL * full).then_some(row)
}

/// Appends the constraint rows of the selected eigenvectors to the faces.
/// Faces are processed in order, so the result is deterministic. Returns
/// the number of rows actually added per pair.
pub fn enrich_constraints(
    constraints: &mut CoarseConstraints,
    pairs: &[FacePair],
    eigpairs: &[EigenDecomposition],
) -> Vec<usize> {
    let mut added = Vec::with_capacity(pairs.len());
    for (pair, eig) in pairs.iter().zip(eigpairs) {
        let lhs = pair.lhs();
        let mut count = 0;
        for k in 0..eig.values.len() {
            if let Some(row) = constraint_row(pair, &lhs, eig.vectors.col(k)) {
                let face = &mut constraints.faces[pair.face];
                if face.push_row(&row) {
                    face.n_adaptive += 1;
                    count += 1;
                }
            }
        }
        added.push(count);
    }
    added
}

/// Per-face record of the enrichment.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceReport {
    pub face: usize,
    pub s: usize,
    pub t: usize,
    /// Largest eigenvalues of the pencil, descending (at most the cap).
    pub top_eigenvalues: Vec<f64>,
    pub rows_added: usize,
}

/// Dense local Schur complements of all subdomains.
pub fn dense_schur_all(subs: &[SubdomainData]) -> Vec<DenseMatrix> {
    par::map(subs, |sub| sub.schur_dense())
}

/// Solves every face eigenproblem against `base`, enriches, and sets up
/// BDDC with the enlarged coarse space.
pub fn adaptive_setup(
    subs: &[SubdomainData],
    imap: &InterfaceMap,
    weights: &InterfaceWeights,
    base: &CoarseConstraints,
    cfg: &AdaptiveConfig,
) -> Result<(Bddc, CoarseConstraints, Vec<FaceReport>)> {
    let schur = dense_schur_all(subs);
    let face_ids: Vec<usize> = (0..base.faces.len()).collect();
    let pairs: Vec<FacePair> = par::map(&face_ids, |&f| build_pair(f, base, imap, weights, &schur));
    let spectra: Vec<EigenDecomposition> = par::map(&pairs, |p| pair_spectrum(p, cfg.shift_factor))
        .into_iter()
        .collect::<Result<_>>()?;
    let selected: Vec<EigenDecomposition> = spectra
        .iter()
        .map(|full| {
            let keep: Vec<usize> = (0..full.values.len())
                .take_while(|&i| full.values[i] > cfg.tau)
                .take(cfg.max_vectors_per_face)
                .collect();
            EigenDecomposition {
                values: keep.iter().map(|&i| full.values[i]).collect(),
                vectors: full.vectors.select_columns(&keep),
            }
        })
        .collect();
    let mut enriched = base.clone();
    let added = enrich_constraints(&mut enriched, &pairs, &selected);
    let reports = pairs
        .iter()
        .zip(&spectra)
        .zip(added)
        .map(|((p, full), rows_added)| FaceReport {
            face: p.face,
            s: p.s,
            t: p.t,
            top_eigenvalues: full
                .values
                .iter()
                .copied()
                .take(cfg.max_vectors_per_face)
                .collect(),
            rows_added,
        })
        .collect();
    let bddc = bddc_setup(subs, imap, &enriched, weights)?;
    Ok((bddc, enriched, reports))
}
