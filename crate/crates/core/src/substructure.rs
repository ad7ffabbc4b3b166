//! Reduction of the global system to the subdomain interface.
//!
//! A degree of freedom touched by the elements of exactly one subdomain is
//! interior to it; one touched by two or more lies on the interface. Each
//! subdomain orders its local unknowns interior-first, then interface in
//! increasing global interface index.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, contract, Result};
use crate::linalg::{factorize_spd, DenseMatrix, SparseMatrix, SpdFactorization, TripletBuilder};
use crate::mesh::{element_stiffness, BoundaryCondition, DofMap, Mesh, Partition};
use crate::operator::LinearOperator;
use crate::par;

/// Global interface numbering and its restriction to every subdomain.
#[derive(Debug, Clone)]
pub struct InterfaceMap {
    interface_dofs: Vec<usize>,
    dof_interface: Vec<Option<usize>>,
    local_to_global: Vec<Vec<usize>>,
    sharers: Vec<Vec<usize>>,
}

impl InterfaceMap {
    pub fn size(&self) -> usize {
        self.interface_dofs.len()
    }

    /// Global dof of interface unknown `g`.
    pub fn dof(&self, g: usize) -> usize {
        self.interface_dofs[g]
    }

    pub fn interface_of_dof(&self, dof: usize) -> Option<usize> {
        self.dof_interface[dof]
    }

    /// Local interface -> global interface map of subdomain `s`.
    pub fn local(&self, s: usize) -> &[usize] {
        &self.local_to_global[s]
    }

    /// Subdomains sharing interface unknown `g`, ascending.
    pub fn sharers(&self, g: usize) -> &[usize] {
        &self.sharers[g]
    }

    pub fn multiplicity(&self, g: usize) -> usize {
        self.sharers[g].len()
    }

    pub fn n_subdomains(&self) -> usize {
        self.local_to_global.len()
    }

    /// `x_s = R_s x`
    pub fn restrict(&self, s: usize, x: &[f64]) -> Vec<f64> {
        self.local_to_global[s].iter().map(|&g| x[g]).collect()
    }

    /// `y += R_s^T x_s`
    pub fn scatter_add(&self, s: usize, xs: &[f64], y: &mut [f64]) {
        for (&g, v) in self.local_to_global[s].iter().zip(xs) {
            y[g] += v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubdomainData {
    pub id: usize,
    /// Local -> global dof, interior unknowns first.
    dofs: Vec<usize>,
    n_interior: usize,
    /// Neumann matrix assembled from this subdomain's elements only.
    k_local: SparseMatrix,
    k_ii: SparseMatrix,
    k_ig: SparseMatrix,
    k_gi: SparseMatrix,
    k_gg: SparseMatrix,
    interior: SpdFactorization,
}

impl SubdomainData {
    pub fn n_local(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_interface(&self) -> usize {
        self.dofs.len() - self.n_interior
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn k_local(&self) -> &SparseMatrix {
        &self.k_local
    }

    pub fn k_ii(&self) -> &SparseMatrix {
        &self.k_ii
    }

    pub fn k_ig(&self) -> &SparseMatrix {
        &self.k_ig
    }

    pub fn k_gi(&self) -> &SparseMatrix {
        &self.k_gi
    }

    pub fn k_gg(&self) -> &SparseMatrix {
        &self.k_gg
    }

    pub fn interior_factor(&self) -> &SpdFactorization {
        &self.interior
    }

    /// Position of the first interface unknown in the local ordering.
    pub fn interface_offset(&self) -> usize {
        self.n_interior
    }

    fn interior_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.interior.solve_into(b, &mut x);
        x
    }

    /// Local Schur complement action
    /// `A_i x = K_GG x - K_GI K_II^{-1} K_IG x`.
    pub fn schur_apply_local(&self, x: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.n_interior];
        self.k_ig.mul_vec_into(x, &mut t);
        let s = self.interior_solve(&t);
        let mut y = vec![0.0; x.len()];
        self.k_gg.mul_vec_into(x, &mut y);
        let mut u = vec![0.0; x.len()];
        self.k_gi.mul_vec_into(&s, &mut u);
        for (yi, ui) in y.iter_mut().zip(&u) {
            *yi -= ui;
        }
        y
    }

    /// Dense local Schur complement, assembled column by column.
    pub fn schur_dense(&self) -> DenseMatrix {
        let n = self.n_interface();
        let mut a = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let c = self.schur_apply_local(&e);
            a.col_mut(j).copy_from_slice(&c);
            e[j] = 0.0;
        }
        a.symmetrize();
        a
    }

    /// Splits a global right-hand side into `(f_I, f_G)`; interface values
    /// are divided evenly among the sharing subdomains.
    pub fn local_rhs(&self, imap: &InterfaceMap, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f_i = self.dofs[..self.n_interior].iter().map(|&d| f[d]).collect();
        let f_g = imap
            .local(self.id)
            .iter()
            .zip(&self.dofs[self.n_interior..])
            .map(|(&g, &d)| f[d] / imap.multiplicity(g) as f64)
            .collect();
        (f_i, f_g)
    }
}

/// Builds per-subdomain blocks and the interface map.
///
/// Local Neumann matrices are assembled from the subdomain's elements with
/// Dirichlet nodes removed, then split into interior/interface blocks; the
/// interior block is factorized once here.
pub fn build_subdomains(
    mesh: &Mesh,
    partition: &Partition,
    bc: &BoundaryCondition,
) -> Result<(Vec<SubdomainData>, InterfaceMap)> {
    if partition.element_subdomain.len() != mesh.n_elements() {
        return Err(contract("partition does not match the mesh"));
    }
    let dof_map = DofMap::new(bc);
    let n_dofs = dof_map.n_dofs();
    let n_sub = partition.n_subdomains();
    let mut sub_dofs: Vec<Vec<usize>> = Vec::with_capacity(n_sub);
    let mut sharers: Vec<Vec<usize>> = vec![Vec::new(); n_dofs];
    for s in 0..n_sub {
        let mut d: Vec<usize> = partition
            .elements_of(s)
            .iter()
            .flat_map(|&e| mesh.elements[e])
            .filter_map(|n| dof_map.node_to_dof[n])
            .collect();
        d.sort_unstable();
        d.dedup();
        if d.is_empty() {
            return Err(contract("empty subdomain"));
        }
        for &dof in &d {
            sharers[dof].push(s);
        }
        sub_dofs.push(d);
    }
    let interface_dofs: Vec<usize> = (0..n_dofs).filter(|&d| sharers[d].len() >= 2).collect();
    let mut dof_interface = vec![None; n_dofs];
    for (g, &d) in interface_dofs.iter().enumerate() {
        dof_interface[d] = Some(g);
    }

    let mut subdomains = Vec::with_capacity(n_sub);
    let mut local_to_global = Vec::with_capacity(n_sub);
    for (s, dofs) in sub_dofs.into_iter().enumerate() {
        let (mut local, gamma): (Vec<usize>, Vec<usize>) =
            dofs.into_iter().partition(|&d| dof_interface[d].is_none());
        let n_interior = local.len();
        // interface dofs are already in increasing global interface order
        local_to_global.push(
            gamma
                .iter()
                .map(|&d| dof_interface[d].unwrap())
                .collect::<Vec<_>>(),
        );
        local.extend(gamma);
        let mut lookup = vec![None; n_dofs];
        for (l, &d) in local.iter().enumerate() {
            lookup[d] = Some(l);
        }
        let n_local = local.len();
        let mut kb = TripletBuilder::new(n_local, n_local);
        for e in partition.elements_of(s) {
            let ke = element_stiffness(mesh, e);
            let nodes = mesh.elements[e];
            for a in 0..4 {
                let Some(la) = dof_map.node_to_dof[nodes[a]].and_then(|d| lookup[d]) else {
                    continue;
                };
                for b in 0..4 {
                    if let Some(lb) = dof_map.node_to_dof[nodes[b]].and_then(|d| lookup[d]) {
                        kb.push(la, lb, ke[a][b]);
                    }
                }
            }
        }
        let k_local = kb.build();
        let idx_i: Vec<usize> = (0..n_interior).collect();
        let idx_g: Vec<usize> = (n_interior..n_local).collect();
        let look_i: Vec<Option<usize>> = (0..n_local)
            .map(|l| (l < n_interior).then_some(l))
            .collect();
        let look_g: Vec<Option<usize>> = (0..n_local)
            .map(|l| (l >= n_interior).then(|| l - n_interior))
            .collect();
        let n_gamma = n_local - n_interior;
        let k_ii = k_local.submatrix(&idx_i, n_interior, &look_i);
        let k_ig = k_local.submatrix(&idx_i, n_gamma, &look_g);
        let k_gi = k_local.submatrix(&idx_g, n_interior, &look_i);
        let k_gg = k_local.submatrix(&idx_g, n_gamma, &look_g);
        let interior = factorize_spd(&k_ii)?;
        subdomains.push(SubdomainData {
            id: s,
            dofs: local,
            n_interior,
            k_local,
            k_ii,
            k_ig,
            k_gi,
            k_gg,
            interior,
        });
    }
    let sharers = interface_dofs.iter().map(|&d| sharers[d].clone()).collect();
    Ok((
        subdomains,
        InterfaceMap {
            interface_dofs,
            dof_interface,
            local_to_global,
            sharers,
        },
    ))
}

fn reduce(imap: &InterfaceMap, parts: Vec<Vec<f64>>) -> Vec<f64> {
    let mut y = vec![0.0; imap.size()];
    for (s, part) in parts.iter().enumerate() {
        imap.scatter_add(s, part, &mut y);
    }
    y
}

/// Interface operator `A x = sum_i R_i^T A_i R_i x`, never formed.
pub fn schur_apply(subs: &[SubdomainData], imap: &InterfaceMap, x: &[f64]) -> Result<Vec<f64>> {
    check_len(imap.size(), x.len())?;
    let parts = par::map(subs, |sub| sub.schur_apply_local(&imap.restrict(sub.id, x)));
    Ok(reduce(imap, parts))
}

/// Condensed interface right-hand side
/// `b = sum_i R_i^T (f_G - K_GI K_II^{-1} f_I)`.
pub fn condense_rhs(subs: &[SubdomainData], imap: &InterfaceMap, f: &[f64]) -> Result<Vec<f64>> {
    let n_dofs = imap.dof_interface.len();
    check_len(n_dofs, f.len())?;
    let parts = par::map(subs, |sub| {
        let (f_i, mut f_g) = sub.local_rhs(imap, f);
        let s = sub.interior_solve(&f_i);
        let mut u = vec![0.0; f_g.len()];
        sub.k_gi.mul_vec_into(&s, &mut u);
        for (fg, ui) in f_g.iter_mut().zip(&u) {
            *fg -= ui;
        }
        f_g
    });
    Ok(reduce(imap, parts))
}

/// Full solution from the interface values: interior unknowns solve
/// `K_II x_I = f_I - K_IG x_G` subdomain by subdomain.
pub fn recover_interior(
    subs: &[SubdomainData],
    imap: &InterfaceMap,
    f: &[f64],
    x_gamma: &[f64],
) -> Result<Vec<f64>> {
    let n_dofs = imap.dof_interface.len();
    check_len(n_dofs, f.len())?;
    check_len(imap.size(), x_gamma.len())?;
    let parts = par::map(subs, |sub| {
        let xg = imap.restrict(sub.id, x_gamma);
        let mut t = vec![0.0; sub.n_interior];
        sub.k_ig.mul_vec_into(&xg, &mut t);
        let rhs: Vec<f64> = sub.dofs[..sub.n_interior]
            .iter()
            .zip(&t)
            .map(|(&d, ti)| f[d] - ti)
            .collect();
        sub.interior_solve(&rhs)
    });
    let mut x = vec![0.0; n_dofs];
    for (g, &d) in imap.interface_dofs.iter().enumerate() {
        x[d] = x_gamma[g];
    }
    for (sub, xi) in subs.iter().zip(parts) {
        for (&d, v) in sub.dofs[..sub.n_interior].iter().zip(xi) {
            x[d] = v;
        }
    }
    Ok(x)
}

/// The interface Schur complement as a [`LinearOperator`].
#[derive(Clone, Copy)]
pub struct SchurOperator<'a> {
    pub subdomains: &'a [SubdomainData],
    pub imap: &'a InterfaceMap,
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.imap.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let parts = par::map(self.subdomains, |sub| {
            sub.schur_apply_local(&self.imap.restrict(sub.id, x))
        });
        y.iter_mut().for_each(|v| *v = 0.0);
        for (s, part) in parts.iter().enumerate() {
            self.imap.scatter_add(s, part, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, partition_boxes, Edge};

    #[test]
    fn strip_interface_is_shared_column() {
        // 2x1 elements split into two subdomains; Dirichlet on the bottom
        let mesh = build_grid(2, 1, 2.0, 1.0).unwrap();
        let part = partition_boxes(&mesh, 2, 1).unwrap();
        let bc = BoundaryCondition::dirichlet_on(&mesh, &[Edge::Bottom], 0.0);
        let (subs, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
        assert_eq!(imap.size(), 1);
        let dofs = DofMap::new(&bc);
        assert_eq!(dofs.dof_to_node[imap.dof(0)], mesh.node_index(1, 1));
        assert_eq!(imap.sharers(0), &[0, 1]);
        assert_eq!(subs[0].n_interface(), 1);
    }

    #[test]
    fn zero_maps_to_zero() {
        let mesh = build_grid(4, 4, 1.0, 1.0).unwrap();
        let part = partition_boxes(&mesh, 2, 2).unwrap();
        let bc = BoundaryCondition::dirichlet_on(&mesh, &[Edge::Left], 0.0);
        let (subs, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
        let y = schur_apply(&subs, &imap, &vec![0.0; imap.size()]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        let n = DofMap::new(&bc).n_dofs();
        let b = condense_rhs(&subs, &imap, &vec![0.0; n]).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        let x = recover_interior(&subs, &imap, &vec![0.0; n], &vec![0.0; imap.size()]).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interface_length_checked() {
        let mesh = build_grid(4, 4, 1.0, 1.0).unwrap();
        let part = partition_boxes(&mesh, 2, 2).unwrap();
        let bc = BoundaryCondition::dirichlet_on(&mesh, &[Edge::Left], 0.0);
        let (subs, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
        assert!(schur_apply(&subs, &imap, &[1.0]).is_err());
    }
}
