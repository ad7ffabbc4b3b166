mod common;

use common::*;
use ddseq_core::mesh::*;
use ddseq_core::operator::LinearOperator;
use ddseq_core::substructure::*;
use proptest::prelude::*;

struct Case {
    k: Mat,
    gamma: Vec<usize>,
    subs: Vec<SubdomainData>,
    imap: InterfaceMap,
    n: usize,
}

fn case(nx: usize, ny: usize, px: usize, py: usize, edges: &[Edge]) -> Case {
    let mesh = build_grid(nx, ny, 1.0, 1.0).unwrap();
    let part = partition_boxes(&mesh, px, py).unwrap();
    let bc = BoundaryCondition::dirichlet_on(&mesh, edges, 0.0);
    let (k, dofs) = assemble_laplacian(&mesh, &bc).unwrap();
    let (subs, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
    let gamma = (0..imap.size()).map(|g| imap.dof(g)).collect();
    Case {
        k: from_sparse(&k),
        gamma,
        subs,
        imap,
        n: dofs.n_dofs(),
    }
}

#[test]
fn strip_interface_is_the_shared_column() {
    let mesh = build_grid(2, 2, 1.0, 1.0).unwrap();
    let part = partition_boxes(&mesh, 2, 1).unwrap();
    let bc = BoundaryCondition::dirichlet_on(&mesh, &[Edge::Bottom], 0.0);
    let dofs = DofMap::new(&bc);
    let (_, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
    let nodes: Vec<usize> = (0..imap.size())
        .map(|g| dofs.dof_to_node[imap.dof(g)])
        .collect();
    assert_eq!(nodes, vec![mesh.node_index(1, 1), mesh.node_index(1, 2)]);
}

#[test]
fn interior_and_interface_cover_unknowns_once() {
    let c = case(4, 4, 2, 2, &[Edge::Left]);
    let mut count = vec![0; c.n];
    for g in 0..c.imap.size() {
        count[c.imap.dof(g)] += 1;
        assert!(c.imap.multiplicity(g) >= 2);
    }
    for sub in &c.subs {
        for &d in &sub.dofs()[..sub.n_interior()] {
            count[d] += 1;
        }
    }
    assert!(count.iter().all(|&k| k == 1));
}

#[test]
fn local_matrices_reassemble_global() {
    let c = case(8, 6, 2, 3, &[Edge::Left, Edge::Top]);
    let mut sum = vec![vec![0.0; c.n]; c.n];
    for sub in &c.subs {
        let kl = from_sparse(sub.k_local());
        for (a, &da) in sub.dofs().iter().enumerate() {
            for (b, &db) in sub.dofs().iter().enumerate() {
                sum[da][db] += kl[a][b];
            }
        }
    }
    for i in 0..c.n {
        for j in 0..c.n {
            assert!((sum[i][j] - c.k[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn blocks_are_consistent() {
    let c = case(8, 8, 2, 2, &[Edge::Right]);
    for sub in &c.subs {
        assert_eq!(sub.k_gi(), &sub.k_ig().transpose());
        assert_eq!(sub.k_ii().n_rows(), sub.n_interior());
        assert_eq!(sub.k_gg().n_rows(), sub.n_interface());
        assert_eq!(c.imap.local(sub.id).len(), sub.n_interface());
    }
}

#[test]
fn schur_matches_dense_oracle() {
    let c = case(16, 16, 2, 2, &[Edge::Left]);
    let s = schur(&c.k, &c.gamma);
    let x = random_vec(&mut rng(1), c.gamma.len());
    let y = schur_apply(&c.subs, &c.imap, &x).unwrap();
    assert!(rel_err(&y, &matvec(&s, &x)) < 1e-10);
    assert!(schur_apply(&c.subs, &c.imap, &vec![0.0; c.gamma.len()])
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    assert!(schur_apply(&c.subs, &c.imap, &[1.0]).is_err());
}

#[test]
fn schur_is_symmetric() {
    let c = case(16, 16, 2, 2, &[Edge::Left]);
    let mut r = rng(2);
    let n = c.gamma.len();
    let (x, y) = (random_vec(&mut r, n), random_vec(&mut r, n));
    let ax = schur_apply(&c.subs, &c.imap, &x).unwrap();
    let ay = schur_apply(&c.subs, &c.imap, &y).unwrap();
    let (a, b) = (dot(&ax, &y), dot(&x, &ay));
    assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
}

#[test]
fn schur_is_positive_definite() {
    let c = case(8, 8, 2, 2, &[Edge::Bottom]);
    let op = SchurOperator {
        subdomains: &c.subs,
        imap: &c.imap,
    };
    let dense = from_dense(&ddseq_core::operator::to_dense(&op));
    let (vals, _) = jacobi_eig(&dense);
    assert!(vals[0] > 0.0);
    assert_eq!(op.dim(), c.gamma.len());
}

#[test]
fn condensation_matches_dense_oracle() {
    let c = case(16, 16, 2, 2, &[Edge::Left]);
    let f = random_vec(&mut rng(3), c.n);
    let b = condense_rhs(&c.subs, &c.imap, &f).unwrap();
    let interior: Vec<usize> = (0..c.n).filter(|i| !c.gamma.contains(i)).collect();
    let kii: Mat = interior
        .iter()
        .map(|&i| interior.iter().map(|&j| c.k[i][j]).collect())
        .collect();
    let fi: Vec<f64> = interior.iter().map(|&i| f[i]).collect();
    let y = gauss_solve(&kii, &fi);
    let want: Vec<f64> = c
        .gamma
        .iter()
        .map(|&g| {
            f[g] - interior
                .iter()
                .zip(&y)
                .map(|(&i, yi)| c.k[g][i] * yi)
                .sum::<f64>()
        })
        .collect();
    assert!(rel_err(&b, &want) < 1e-10);
    assert!(condense_rhs(&c.subs, &c.imap, &vec![0.0; c.n])
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn interface_only_load_passes_through() {
    let c = case(8, 8, 2, 2, &[Edge::Left]);
    let sub = &c.subs[3];
    let mut f = vec![0.0; c.n];
    for (k, &d) in sub.dofs()[sub.n_interior()..].iter().enumerate() {
        f[d] = 1.0 + k as f64;
    }
    let b = condense_rhs(&c.subs, &c.imap, &f).unwrap();
    let want: Vec<f64> = c.gamma.iter().map(|&g| f[g]).collect();
    assert!(rel_err(&b, &want) < 1e-14);
}

#[test]
fn recovery_from_exact_interface_values() {
    let c = case(16, 16, 2, 2, &[Edge::Left, Edge::Bottom]);
    let f = random_vec(&mut rng(4), c.n);
    let x = gauss_solve(&c.k, &f);
    let xg: Vec<f64> = c.gamma.iter().map(|&g| x[g]).collect();
    let rec = recover_interior(&c.subs, &c.imap, &f, &xg).unwrap();
    assert!(rel_err(&rec, &x) < 1e-9);
    let zero =
        recover_interior(&c.subs, &c.imap, &vec![0.0; c.n], &vec![0.0; c.gamma.len()]).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
}

#[test]
fn multiplicities_from_restrictions() {
    let c = case(12, 12, 3, 3, &[Edge::Top]);
    let mut count = vec![0usize; c.imap.size()];
    for s in 0..c.imap.n_subdomains() {
        let ones = vec![1.0; c.imap.local(s).len()];
        let mut y = vec![0.0; c.imap.size()];
        c.imap.scatter_add(s, &ones, &mut y);
        for (g, v) in y.iter().enumerate() {
            count[g] += *v as usize;
        }
    }
    for g in 0..c.imap.size() {
        assert_eq!(count[g], c.imap.multiplicity(g));
        assert_eq!(c.imap.sharers(g).len(), c.imap.multiplicity(g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schur_matches_oracle_on_random_layouts(
        bx in 1usize..4, by in 1usize..4, px in 1usize..4, py in 1usize..4,
        edge in 0usize..4, seed in 0u64..1000,
    ) {
        prop_assume!(px * py > 1);
        let e = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top][edge];
        let c = case(bx * px, by * py, px, py, &[e]);
        prop_assume!(c.imap.size() > 0);
        let x = random_vec(&mut rng(seed), c.gamma.len());
        let y = schur_apply(&c.subs, &c.imap, &x).unwrap();
        prop_assert!(rel_err(&y, &matvec(&schur(&c.k, &c.gamma), &x)) < 1e-10);
    }
}
