mod common;

use common::*;
use ddseq_core::adaptive::AdaptiveConfig;
use ddseq_core::flowseq::{SequenceConfig, SequenceMode, SyntheticSequence};
use ddseq_core::krylov::{deflated_pcg, DeflationState, StopKind, StoppingRule, Strategy};
use ddseq_core::mesh::*;
use ddseq_core::operator::LinearOperator;
use ddseq_core::solver::{SequenceSolver, SolverConfig};
use ddseq_core::substructure::SchurOperator;

struct Problem {
    mesh: Mesh,
    part: Partition,
    bc: BoundaryCondition,
}

fn problem(n: usize, p: usize) -> Problem {
    let mesh = build_grid(n, n, 1.0, 1.0).unwrap();
    let part = partition_boxes(&mesh, p, p).unwrap();
    let bc = BoundaryCondition::dirichlet_on(&mesh, &[Edge::Left], 0.0);
    Problem { mesh, part, bc }
}

impl Problem {
    fn solver(&self, cfg: SolverConfig) -> SequenceSolver {
        SequenceSolver::new(&self.mesh, &self.part, &self.bc, cfg).unwrap()
    }

    fn sequence(&self, mode: SequenceMode, steps: usize) -> Vec<Vec<f64>> {
        let seq = SyntheticSequence::new(&SequenceConfig::new(mode, steps), &self.mesh).unwrap();
        let dofs = DofMap::new(&self.bc);
        (0..steps).map(|k| dofs.restrict(&seq.rhs(k))).collect()
    }
}

fn rule(kind: StopKind, tol: f64) -> StoppingRule {
    StoppingRule::new(kind, tol)
}

#[test]
fn substructured_solve_matches_direct() {
    for (n, p) in [(8, 2), (16, 2), (32, 4)] {
        let pr = problem(n, p);
        let mut s = pr.solver(SolverConfig {
            rule: rule(StopKind::RelativeToRhs, 1e-12),
            ..SolverConfig::default()
        });
        let f = pr.sequence(SequenceMode::SyntheticPeriodic, 1).remove(0);
        let (x, rep) = s.solve(&f).unwrap();
        assert!(rep.converged);
        let (k, _) = assemble_laplacian(&pr.mesh, &pr.bc).unwrap();
        assert!(rel_err(&x, &gauss_solve(&from_sparse(&k), &f)) < 1e-8);
    }
}

#[test]
fn setup_happens_once() {
    let pr = problem(16, 4);
    let mut s = pr.solver(SolverConfig {
        strategy: Strategy::B4,
        deflation_size: 10,
        ..SolverConfig::default()
    });
    for f in pr.sequence(SequenceMode::SyntheticPeriodic, 12) {
        s.solve(&f).unwrap();
    }
    assert_eq!(s.setup_calls(), 1);
    assert_eq!(s.steps_solved(), 12);
    assert!(s.deflation().size() <= 10);
}

#[test]
fn zero_guess_runs_agree_on_first_step() {
    let pr = problem(16, 2);
    let f = pr.sequence(SequenceMode::SyntheticTransient, 1).remove(0);
    for kind in [StopKind::RelativeToInitial, StopKind::RelativeToRhs] {
        let mut its = Vec::new();
        for warm in [true, false] {
            let mut s = pr.solver(SolverConfig {
                rule: rule(kind, 1e-6),
                warm_start: warm,
                ..SolverConfig::default()
            });
            its.push(s.solve(&f).unwrap().1.iterations);
        }
        assert_eq!(its[0], its[1]);
    }
}

#[test]
fn search_directions_are_a_orthogonal_under_bddc() {
    let pr = problem(32, 4);
    let s = pr.solver(SolverConfig::default());
    let op = SchurOperator {
        subdomains: s.subdomains(),
        imap: s.interface_map(),
    };
    let n = s.interface_map().size();
    let b = random_vec(&mut rng(1), n);
    let mut st = DeflationState::new(n, Strategy::B2, 50);
    deflated_pcg(
        &op,
        s.preconditioner(),
        &mut st,
        &b,
        &vec![0.0; n],
        &rule(StopKind::RelativeToRhs, 1e-10),
    )
    .unwrap();
    let p = st.search_directions();
    let ap: Vec<Vec<f64>> = (0..p.n_cols()).map(|j| op.apply_vec(p.col(j))).collect();
    let an: Vec<f64> = (0..p.n_cols())
        .map(|j| dot(&ap[j], p.col(j)).sqrt())
        .collect();
    for j in 0..p.n_cols() {
        for l in 0..j {
            assert!(dot(&ap[j], p.col(l)).abs() <= 1e-8 * an[j] * an[l]);
        }
    }
}

#[test]
fn huge_threshold_matches_plain_bddc() {
    let pr = problem(32, 4);
    let rhs = pr.sequence(SequenceMode::SyntheticPeriodic, 5);
    let run = |adaptive: Option<AdaptiveConfig>| -> Vec<usize> {
        let mut s = pr.solver(SolverConfig {
            adaptive,
            ..SolverConfig::default()
        });
        rhs.iter()
            .map(|f| s.solve(f).unwrap().1.iterations)
            .collect()
    };
    assert_eq!(run(None), run(Some(AdaptiveConfig::new(1e12).unwrap())));
    let tau3 = run(Some(AdaptiveConfig::new(3.0).unwrap()));
    assert!(tau3.iter().zip(run(None)).all(|(a, b)| *a <= b));
}

#[test]
fn warm_started_transient_counts_settle() {
    let pr = problem(16, 4);
    let mut s = pr.solver(SolverConfig::default());
    let its: Vec<usize> = pr
        .sequence(SequenceMode::SyntheticTransient, 120)
        .iter()
        .map(|f| s.solve(f).unwrap().1.iterations)
        .collect();
    assert!(its[20..].windows(2).all(|w| w[1] <= w[0]), "{its:?}");
}

#[test]
fn wrong_rhs_length_is_rejected() {
    let pr = problem(8, 2);
    let mut s = pr.solver(SolverConfig::default());
    assert!(s.solve(&[1.0; 3]).is_err());
}
