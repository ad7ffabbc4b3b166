use ddseq::harness::iterations_cell;
use ddseq::{run_experiment, summarize, ExperimentConfig, StepRecord};
use ddseq_core::flowseq::SequenceMode;
use ddseq_core::krylov::{StopKind, Strategy};
use proptest::prelude::*;

fn small(edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        nx: 16,
        ny: 16,
        px: 4,
        py: 4,
        steps: 30,
        timings: false,
        ..ExperimentConfig::default()
    };
    edit(&mut c);
    c
}

fn record(step: usize, iterations: usize, time_s: f64) -> StepRecord {
    StepRecord {
        step,
        iterations,
        converged: true,
        relres0: 1.0,
        relres_final: 1e-7,
        time_s,
        rhs_norm: 1.0,
        deflation_size: 0,
        residual_history: Vec::new(),
        ritz_values: Vec::new(),
        corrector_residual: None,
    }
}

#[test]
fn table_cells() {
    let recs: Vec<StepRecord> = (1..=4).map(|k| record(k, 17, 0.5)).collect();
    let row = summarize(&recs, (2, 4)).unwrap();
    assert_eq!(row.iterations_cell, "17-17(17)");
    assert_eq!(iterations_cell(10, 11, 10.2), "10-11(10.2)");
}

#[test]
fn setup_step_stays_out_of_the_means() {
    let mut recs: Vec<StepRecord> = (1..=5).map(|k| record(k, 4, 0.1)).collect();
    recs[0].iterations = 40;
    recs[0].time_s = 100.0;
    let row = summarize(&recs, (2, 5)).unwrap();
    assert_eq!(row.mean_iters, 4.0);
    assert!((row.mean_step_time_s - 0.1).abs() < 1e-15);
    assert!((row.mean_iter_time_s - 0.4 / 16.0).abs() < 1e-15);
    assert_eq!(row.step1_iters, 40);
    assert_eq!(row.step1_time_s, 100.0);
    assert!(summarize(&recs, (0, 3)).is_err());
    assert!(summarize(&recs, (4, 3)).is_err());
    assert!(summarize(&recs, (2, 6)).is_err());
}

#[test]
fn single_step_summary_is_that_step() {
    let out = run_experiment(&small(|c| c.steps = 1)).unwrap();
    let s = &out.summary;
    assert_eq!((s.window_first, s.window_last), (1, 1));
    assert_eq!(s.min_iters, out.steps[0].iterations);
    assert_eq!(s.max_iters, s.min_iters);
    assert_eq!(s.mean_iters, s.min_iters as f64);
}

#[test]
fn stopping_and_guess_combinations() {
    let run = |kind, warm| {
        run_experiment(&small(|c| {
            c.mode = SequenceMode::SyntheticTransient;
            c.steps = 60;
            c.stop_kind = kind;
            c.warm_start = warm;
        }))
        .unwrap()
    };
    let init_cold = run(StopKind::RelativeToInitial, false);
    let rhs_cold = run(StopKind::RelativeToRhs, false);
    let init_warm = run(StopKind::RelativeToInitial, true);
    let rhs_warm = run(StopKind::RelativeToRhs, true);
    let its =
        |o: &ddseq::ExperimentOutput| o.steps.iter().map(|r| r.iterations).collect::<Vec<_>>();
    assert_eq!(its(&init_cold), its(&rhs_cold));
    let lowest = rhs_warm.summary.cumulative_iters;
    for o in [&init_cold, &rhs_cold, &init_warm] {
        assert!(lowest < o.summary.cumulative_iters);
    }
}

#[test]
fn periodic_initial_residual_stagnates() {
    let out = run_experiment(&small(|c| {
        c.mode = SequenceMode::SyntheticPeriodic;
        c.steps = 120;
    }))
    .unwrap();
    let tail = out.steps[60..]
        .iter()
        .map(|r| r.relres0)
        .fold(f64::INFINITY, f64::min);
    assert!(tail > 1e-3, "{tail}");
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let base = small(|c| {
        c.mode = SequenceMode::SyntheticPeriodic;
        c.strategy = Strategy::B4;
        c.deflation_size = 10;
        c.adaptive = true;
        c.tau = 1.2;
    });
    let one = run_experiment(&ExperimentConfig {
        workers: 1,
        ..base.clone()
    })
    .unwrap();
    let again = run_experiment(&ExperimentConfig {
        workers: 1,
        ..base.clone()
    })
    .unwrap();
    let four = run_experiment(&ExperimentConfig { workers: 4, ..base }).unwrap();
    assert_eq!(one.steps, again.steps);
    assert_eq!(one.steps, four.steps);
    assert_eq!(one.summary, four.summary);
}

#[test]
fn combined_variant_beats_baseline() {
    let run = |strategy, adaptive| {
        run_experiment(&ExperimentConfig {
            mode: SequenceMode::SyntheticPeriodic,
            steps: 200,
            strategy,
            adaptive,
            tau: 3.0,
            timings: false,
            ..ExperimentConfig::default()
        })
        .unwrap()
        .summary
        .mean_iters
    };
    assert!(run(Strategy::B4, true) < run(Strategy::None, false));
}

#[test]
fn flow_mode_sets_up_once() {
    let out = run_experiment(&small(|c| {
        c.mode = SequenceMode::Flow2d;
        c.dirichlet.clear();
        c.dt = 0.005;
        c.nu = 0.01;
        c.steps = 5;
        c.tol = 1e-8;
    }))
    .unwrap();
    assert_eq!(out.setup_calls, 1);
    assert!(out
        .steps
        .iter()
        .all(|r| r.corrector_residual.unwrap() <= 1e-6));
}

#[test]
fn failing_step_is_named() {
    let err = run_experiment(&small(|c| {
        c.mode = SequenceMode::Flow2d;
        c.dirichlet.clear();
        c.dt = 10.0;
        c.steps = 3;
    }))
    .unwrap_err();
    assert!(err.to_string().contains("step 1"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summary_bounds(iters in proptest::collection::vec(0usize..40, 2..30), first in 2usize..5) {
        let recs: Vec<StepRecord> = iters.iter().enumerate().map(|(k, &i)| record(k + 1, i, 0.01)).collect();
        let first = first.min(recs.len());
        let row = summarize(&recs, (first, recs.len())).unwrap();
        prop_assert!(row.min_iters as f64 <= row.mean_iters && row.mean_iters <= row.max_iters as f64);
        prop_assert_eq!(row.cumulative_iters, iters.iter().sum::<usize>());
        prop_assert_eq!(summarize(&recs, (first, recs.len())).unwrap(), row);
    }
}
