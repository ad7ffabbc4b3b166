//! Structured 2D grids, bilinear (Q1) finite elements and box partitions.
//!
//! Nodes are numbered lexicographically with x fastest: node `(i, j)` has
//! index `j * (nx + 1) + i`. Elements follow the same rule, and the four
//! nodes of an element are listed counter-clockwise starting at its
//! lower-left corner.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{contract, Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
}

/// Tensor-product grid of `nx x ny` rectangles on `[0, lx] x [0, ly]`.
pub fn build_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(contract("grid needs at least one element per axis"));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(contract("grid lengths must be positive"));
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // exact endpoints
            let x = if i == nx { lx } else { i as f64 * hx };
            let y = if j == ny { ly } else { j as f64 * hy };
            coords.push([x, y]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for ey in 0..ny {
        for ex in 0..nx {
            let n0 = ey * (nx + 1) + ex;
            elements.push([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]);
        }
    }
    Ok(Mesh {
        nx,
        ny,
        lx,
        ly,
        coords,
        elements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Grid coordinates `(i, j)` of a node.
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn edge_nodes(&self, edge: Edge) -> Vec<usize> {
        match edge {
            Edge::Left => (0..=self.ny).map(|j| self.node_index(0, j)).collect(),
            Edge::Right => (0..=self.ny).map(|j| self.node_index(self.nx, j)).collect(),
            Edge::Bottom => (0..=self.nx).map(|i| self.node_index(i, 0)).collect(),
            Edge::Top => (0..=self.nx).map(|i| self.node_index(i, self.ny)).collect(),
        }
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let (i, j) = self.node_ij(node);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }
}

/// Per-node boundary condition: `Some(value)` for Dirichlet, `None` for
/// natural (Neumann) or interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    dirichlet: Vec<Option<f64>>,
}

impl BoundaryCondition {
    pub fn neumann(mesh: &Mesh) -> Self {
        Self {
            dirichlet: vec![None; mesh.n_nodes()],
        }
    }

    pub fn dirichlet_on(mesh: &Mesh, edges: &[Edge], value: f64) -> Self {
        let mut bc = Self::neumann(mesh);
        for &e in edges {
            for n in mesh.edge_nodes(e) {
                bc.dirichlet[n] = Some(value);
            }
        }
        bc
    }

    pub fn set_dirichlet(&mut self, node: usize, value: f64) {
        self.dirichlet[node] = Some(value);
    }

    pub fn dirichlet_value(&self, node: usize) -> Option<f64> {
        self.dirichlet[node]
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dirichlet[node].is_some()
    }

    pub fn n_dirichlet(&self) -> usize {
        self.dirichlet.iter().filter(|d| d.is_some()).count()
    }

    pub fn n_nodes(&self) -> usize {
        self.dirichlet.len()
    }
}

/// Maps retained (non-Dirichlet) nodes to equation indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<usize>>,
    pub dof_to_node: Vec<usize>,
}

impl DofMap {
    pub fn new(bc: &BoundaryCondition) -> Self {
        let mut node_to_dof = vec![None; bc.n_nodes()];
        let mut dof_to_node = Vec::new();
        for (n, slot) in node_to_dof.iter_mut().enumerate() {
            if !bc.is_dirichlet(n) {
                *slot = Some(dof_to_node.len());
                dof_to_node.push(n);
            }
        }
        Self {
            node_to_dof,
            dof_to_node,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_to_node.iter().map(|&n| nodal[n]).collect()
    }

    /// Nodal vector from equation values, with Dirichlet values filled in.
    pub fn extend(&self, dofs: &[f64], bc: &BoundaryCondition) -> Vec<f64> {
        (0..self.node_to_dof.len())
            .map(|n| match self.node_to_dof[n] {
                Some(d) => dofs[d],
                None => bc.dirichlet_value(n).unwrap_or(0.0),
            })
            .collect()
    }
}

const GAUSS: f64 = 0.577_350_269_189_625_8;
const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

/// Values and physical gradients of the four Q1 shape functions at one
/// quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub weight: f64,
    pub x: f64,
    pub y: f64,
    pub phi: [f64; 4],
    pub dphi_dx: [f64; 4],
    pub dphi_dy: [f64; 4],
}

/// 2x2 Gauss rule on an element; exact for the Q1 stiffness and mass
/// integrands on rectangles.
pub fn element_quadrature(mesh: &Mesh, element: usize) -> [QuadPoint; 4] {
    let [n0, ..] = mesh.elements[element];
    let [x0, y0] = mesh.coords[n0];
    let hx = mesh.hx();
    let hy = mesh.hy();
    let pts = [
        (-GAUSS, -GAUSS),
        (GAUSS, -GAUSS),
        (GAUSS, GAUSS),
        (-GAUSS, GAUSS),
    ];
    pts.map(|(xi, eta)| {
        let mut q = QuadPoint {
            weight: 0.25 * hx * hy,
            x: x0 + 0.5 * hx * (1.0 + xi),
            y: y0 + 0.5 * hy * (1.0 + eta),
            phi: [0.0; 4],
            dphi_dx: [0.0; 4],
            dphi_dy: [0.0; 4],
        };
        for a in 0..4 {
            q.phi[a] = 0.25 * (1.0 + xi * XI[a]) * (1.0 + eta * ETA[a]);
            q.dphi_dx[a] = 0.25 * XI[a] * (1.0 + eta * ETA[a]) * 2.0 / hx;
            q.dphi_dy[a] = 0.25 * (1.0 + xi * XI[a]) * ETA[a] * 2.0 / hy;
        }
        q
    })
}

/// Element stiffness `int grad(phi_a) . grad(phi_b)`.
pub fn element_stiffness(mesh: &Mesh, element: usize) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    for q in element_quadrature(mesh, element) {
        for a in 0..4 {
            for b in 0..4 {
                k[a][b] += q.weight * (q.dphi_dx[a] * q.dphi_dx[b] + q.dphi_dy[a] * q.dphi_dy[b]);
            }
        }
    }
    k
}

/// Consistent element mass `int phi_a phi_b`.
pub fn element_mass(mesh: &Mesh, element: usize) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for q in element_quadrature(mesh, element) {
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += q.weight * q.phi[a] * q.phi[b];
            }
        }
    }
    m
}

fn assemble_all(mesh: &Mesh, local: impl Fn(&Mesh, usize) -> [[f64; 4]; 4]) -> SparseMatrix {
    let n = mesh.n_nodes();
    let mut b = TripletBuilder::new(n, n);
    for (e, nodes) in mesh.elements.iter().enumerate() {
        let k = local(mesh, e);
        for a in 0..4 {
            for c in 0..4 {
                b.push(nodes[a], nodes[c], k[a][c]);
            }
        }
    }
    b.build()
}

/// Q1 stiffness on all nodes (natural boundary conditions everywhere).
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    assemble_all(mesh, element_stiffness)
}

/// Stiffness with Dirichlet rows and columns eliminated. The returned
/// [`DofMap`] sends retained nodes to equation indices.
pub fn assemble_laplacian(mesh: &Mesh, bc: &BoundaryCondition) -> Result<(SparseMatrix, DofMap)> {
    if bc.n_nodes() != mesh.n_nodes() {
        return Err(contract("boundary condition does not match the mesh"));
    }
    if bc.n_dirichlet() == 0 {
        return Err(Error::SingularOperator);
    }
    let dofs = DofMap::new(bc);
    let full = assemble_stiffness(mesh);
    let k = full.submatrix(&dofs.dof_to_node, dofs.n_dofs(), &dofs.node_to_dof);
    Ok((k, dofs))
}

pub fn assemble_mass(mesh: &Mesh) -> SparseMatrix {
    assemble_all(mesh, element_mass)
}

/// Load vector `int g phi_i` for a source function `g`.
pub fn assemble_load(mesh: &Mesh, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_nodes()];
    for (e, nodes) in mesh.elements.iter().enumerate() {
        for q in element_quadrature(mesh, e) {
            let gq = g(q.x, q.y);
            for a in 0..4 {
                f[nodes[a]] += q.weight * gq * q.phi[a];
            }
        }
    }
    f
}

/// Element-to-subdomain assignment for a `px x py` box layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub px: usize,
    pub py: usize,
    /// Elements per subdomain along x and y.
    pub box_nx: usize,
    pub box_ny: usize,
    pub element_subdomain: Vec<usize>,
}

impl Partition {
    pub fn n_subdomains(&self) -> usize {
        self.px * self.py
    }

    /// Elements of subdomain `s`, in increasing order.
    pub fn elements_of(&self, s: usize) -> Vec<usize> {
        self.element_subdomain
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == s)
            .map(|(e, _)| e)
            .collect()
    }

    /// Whether the grid node `(i, j)` sits on a corner of the box lattice.
    pub fn on_corner_lattice(&self, i: usize, j: usize) -> bool {
        i.is_multiple_of(self.box_nx) && j.is_multiple_of(self.box_ny)
    }
}

/// Splits the mesh into `px x py` equal boxes, numbered lexicographically.
pub fn partition_boxes(mesh: &Mesh, px: usize, py: usize) -> Result<Partition> {
    if px == 0 || py == 0 || !mesh.nx.is_multiple_of(px) || !mesh.ny.is_multiple_of(py) {
        return Err(contract("subdomain counts must divide the element counts"));
    }
    let box_nx = mesh.nx / px;
    let box_ny = mesh.ny / py;
    let element_subdomain = (0..mesh.n_elements())
        .map(|e| {
            let (ex, ey) = (e % mesh.nx, e / mesh.nx);
            (ey / box_ny) * px + ex / box_nx
        })
        .collect();
    Ok(Partition {
        px,
        py,
        box_nx,
        box_ny,
        element_subdomain,
    })
}
