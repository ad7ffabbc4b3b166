mod common;

use common::*;
use ddseq_core::adaptive::*;
use ddseq_core::bddc::*;
use ddseq_core::linalg::DenseMatrix;
use ddseq_core::mesh::*;
use ddseq_core::operator::LinearOperator;
use ddseq_core::substructure::*;

struct Setup {
    subs: Vec<SubdomainData>,
    imap: InterfaceMap,
    base: CoarseConstraints,
    weights: InterfaceWeights,
}

fn setup(nx: usize, ny: usize, px: usize, py: usize, edges: &[Edge]) -> Setup {
    let mesh = build_grid(nx, ny, 1.0, 1.0).unwrap();
    let part = partition_boxes(&mesh, px, py).unwrap();
    let bc = BoundaryCondition::dirichlet_on(&mesh, edges, 0.0);
    let dofs = DofMap::new(&bc);
    let (subs, imap) = build_subdomains(&mesh, &part, &bc).unwrap();
    let base = select_coarse_dofs(&imap, &mesh, &part, &dofs).unwrap();
    let weights = build_weights(&subs, &imap, WeightScheme::Card).unwrap();
    Setup {
        subs,
        imap,
        base,
        weights,
    }
}

impl Setup {
    fn pair(&self, constraints: &CoarseConstraints, face: usize) -> FacePair {
        build_pair(
            face,
            constraints,
            &self.imap,
            &self.weights,
            &dense_schur_all(&self.subs),
        )
    }

    fn adaptive(&self, tau: f64) -> (Bddc, CoarseConstraints, Vec<FaceReport>) {
        let cfg = AdaptiveConfig::new(tau).unwrap();
        adaptive_setup(&self.subs, &self.imap, &self.weights, &self.base, &cfg).unwrap()
    }
}

fn swap_blocks(m: &DenseMatrix, ns: usize) -> DenseMatrix {
    let n = m.n_rows();
    let perm = |i: usize| if i < ns { n - ns + i } else { i - ns };
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(perm(i), perm(j))] = m[(i, j)];
        }
    }
    out
}

fn spectrum(pair: &FacePair) -> Vec<f64> {
    pair_spectrum(pair, 1e-10).unwrap().values
}

#[test]
fn pair_spectrum_is_nonnegative_and_swap_invariant() {
    let s = setup(8, 8, 2, 1, &[Edge::Bottom, Edge::Top]);
    let pair = s.pair(&s.base, 0);
    let lam = spectrum(&pair);
    assert!(lam.iter().all(|v| v.is_finite() && *v >= -1e-5), "{lam:?}");
    let ns = s.imap.local(pair.s).len();
    let swapped = FacePair {
        s: pair.t,
        t: pair.s,
        face_positions: pair
            .face_positions
            .iter()
            .map(|&(a, b)| (b - ns, a + pair.order() - ns))
            .collect(),
        a_st: swap_blocks(&pair.a_st, ns),
        jump: swap_blocks(&pair.jump, ns),
        proj: swap_blocks(&pair.proj, ns),
        ..pair.clone()
    };
    let lam2 = spectrum(&swapped);
    for (a, b) in lam.iter().zip(&lam2) {
        if *a > 1e-3 {
            assert!((a - b).abs() <= 1e-8 * a);
        } else {
            assert!(b.abs() < 1e-5);
        }
    }
}

#[test]
fn continuous_functions_are_annihilated() {
    let s = setup(8, 8, 2, 2, &[Edge::Left]);
    let pair = s.pair(&s.base, 0);
    let (gs, gt) = (s.imap.local(pair.s), s.imap.local(pair.t));
    let global = random_vec(&mut rng(7), s.imap.size());
    let w: Vec<f64> = gs.iter().chain(gt).map(|&g| global[g]).collect();
    let lhs = pair.lhs();
    let y = lhs.mul_vec(&w);
    assert!(norm(&y) <= 1e-10 * lhs.max_abs() * norm(&w));
    assert!(spectrum(&pair).last().unwrap().abs() < 1e-6);
}

#[test]
fn pencil_matches_dense_construction() {
    let s = setup(16, 16, 2, 1, &[Edge::Bottom]);
    let pair = s.pair(&s.base, 0);
    let (gs, gt) = (s.imap.local(0), s.imap.local(1));
    let (ns, nt) = (gs.len(), gt.len());
    let n = ns + nt;
    let mut a = vec![vec![0.0; n]; n];
    for (sub, off) in [(0, 0), (1, ns)] {
        let k = from_sparse(s.subs[sub].k_local());
        let gamma: Vec<usize> = (s.subs[sub].n_interior()..s.subs[sub].n_local()).collect();
        let sch = schur(&k, &gamma);
        for i in 0..sch.len() {
            for j in 0..sch.len() {
                a[off + i][off + j] = sch[i][j];
            }
        }
    }
    let mut jump: Mat = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for (p, g) in gs.iter().enumerate() {
        if let Some(q) = gt.iter().position(|h| h == g) {
            jump[p][p] = 0.5;
            jump[ns + q][ns + q] = 0.5;
            jump[p][ns + q] = -0.5;
            jump[ns + q][p] = -0.5;
        }
    }
    let mut q_rows: Mat = Vec::new();
    for &g in &s.base.corners {
        let mut r = vec![0.0; n];
        r[gs.iter().position(|&h| h == g).unwrap()] = 1.0;
        r[ns + gt.iter().position(|&h| h == g).unwrap()] = -1.0;
        q_rows.push(r);
    }
    let mut r = vec![0.0; n];
    for &g in &s.base.faces[0].dofs {
        r[gs.iter().position(|&h| h == g).unwrap()] = 1.0;
        r[ns + gt.iter().position(|&h| h == g).unwrap()] = -1.0;
    }
    q_rows.push(r);
    let qq = matmul(&q_rows, &transpose(&q_rows));
    let qqi = inverse(&qq);
    let corr = matmul(&transpose(&q_rows), &matmul(&qqi, &q_rows));
    let proj: Mat = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64 - corr[i][j]).collect())
        .collect();
    let jp = matmul(&jump, &proj);
    let mut lhs = matmul(&transpose(&jp), &matmul(&a, &jp));
    let mut rhs = matmul(&proj, &matmul(&a, &proj));
    symmetrize(&mut lhs);
    symmetrize(&mut rhs);
    let shift = 1e-10 * (0..n).map(|i| rhs[i][i]).sum::<f64>() / n as f64;
    for (i, row) in rhs.iter_mut().enumerate() {
        row[i] += shift;
    }
    let l = cholesky(&rhs);
    let li = inverse(&l);
    let mut c = matmul(&li, &matmul(&lhs, &transpose(&li)));
    symmetrize(&mut c);
    let (mut oracle, _) = jacobi_eig(&c);
    oracle.reverse();
    let got = spectrum(&pair);
    for k in 0..10 {
        assert!(
            (got[k] - oracle[k]).abs() < 1e-8 * oracle[k].max(1.0),
            "{k}: {} vs {}",
            got[k],
            oracle[k]
        );
    }
}

#[test]
fn huge_threshold_adds_nothing() {
    let s = setup(16, 16, 4, 4, &[Edge::Left]);
    let (p, enriched, reports) = s.adaptive(1e12);
    assert_eq!(enriched, s.base);
    assert!(reports.iter().all(|r| r.rows_added == 0));
    let base = bddc_setup(&s.subs, &s.imap, &s.base, &s.weights).unwrap();
    let x = random_vec(&mut rng(8), s.imap.size());
    assert_eq!(p.apply_vec(&x), base.apply_vec(&x));
}

#[test]
fn rows_grow_as_threshold_drops() {
    let s = setup(16, 16, 4, 4, &[Edge::Left]);
    let mut prev = 0;
    for tau in [10.0, 5.0, 3.5, 3.0, 2.5, 2.0, 1.5, 1.1] {
        let (p, enriched, reports) = s.adaptive(tau);
        let added: usize = reports.iter().map(|r| r.rows_added).sum();
        assert!(added >= prev);
        assert_eq!(enriched.n_adaptive(), added);
        assert_eq!(p.coarse_order(), s.base.n_coarse() + added);
        assert!(reports.iter().all(|r| r.rows_added <= 10));
        prev = added;
    }
    assert!(prev > 0);
}

#[test]
fn enrichment_caps_pair_spectrum() {
    let s = setup(16, 16, 4, 4, &[Edge::Left]);
    let tau = 1.1;
    let (_, enriched, reports) = s.adaptive(tau);
    assert!(enriched.n_adaptive() > 0);
    for r in &reports {
        if r.rows_added == 10 {
            continue;
        }
        let again = spectrum(&s.pair(&enriched, r.face));
        assert!(
            again[0] <= tau * (1.0 + 1e-8),
            "face {}: {}",
            r.face,
            again[0]
        );
    }
}

#[test]
fn reports_list_leading_eigenvalues() {
    let s = setup(16, 16, 4, 4, &[Edge::Left]);
    let (_, _, reports) = s.adaptive(3.0);
    assert_eq!(reports.len(), s.base.faces.len());
    for r in &reports {
        let full = spectrum(&s.pair(&s.base, r.face));
        assert_eq!(r.top_eigenvalues.len(), full.len().min(10));
        assert!(r.top_eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let above = full.iter().filter(|&&v| v > 3.0).count().min(10);
        assert!(r.rows_added <= above);
    }
}

#[test]
fn enrichment_keeps_spectrum_floor() {
    let s = setup(12, 12, 3, 3, &[Edge::Left]);
    let op = SchurOperator {
        subdomains: &s.subs,
        imap: &s.imap,
    };
    let mut a = from_dense(&ddseq_core::operator::to_dense(&op));
    symmetrize(&mut a);
    for tau in [3.0, 1.5] {
        let (p, _, _) = s.adaptive(tau);
        let mut minv = from_dense(&ddseq_core::operator::to_dense(&p));
        symmetrize(&mut minv);
        assert!(preconditioned_spectrum(&a, &minv)[0] >= 1.0 - 1e-8);
    }
}

#[test]
fn threshold_must_exceed_one() {
    assert!(AdaptiveConfig::new(1.0).is_err());
    assert!(AdaptiveConfig::new(f64::NAN).is_err());
    assert_eq!(AdaptiveConfig::new(2.0).unwrap().max_vectors_per_face, 10);
}
