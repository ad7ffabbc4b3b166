//! Experiment orchestration: sequence generation, the solver pipeline,
//! timing and summary statistics.

use std::time::Instant;

use serde::Serialize;

use ddseq_core::bddc::diagnostics;
use ddseq_core::flowseq::{
    flow_step, taylor_green_pressure, taylor_green_velocity, FlowProblem, FlowState, PoissonSolver,
    SequenceMode, SyntheticSequence,
};
use ddseq_core::krylov::SolveReport;
use ddseq_core::mesh::{build_grid, partition_boxes, Mesh, Partition};
use ddseq_core::solver::SequenceSolver;

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("setup failed")]
    Setup(#[source] ddseq_core::Error),
    #[error("step {step} failed")]
    Step {
        step: usize,
        #[source]
        source: ddseq_core::Error,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// One solve of the sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Initial residual relative to `||b||`.
    pub relres0: f64,
    /// Final true residual relative to `||b||`.
    pub relres_final: f64,
    pub time_s: f64,
    pub rhs_norm: f64,
    pub deflation_size: usize,
    #[serde(skip)]
    pub residual_history: Vec<f64>,
    #[serde(skip)]
    pub ritz_values: Vec<f64>,
    /// Relative residual of the corrector equation (flow mode only).
    pub corrector_residual: Option<f64>,
}

impl StepRecord {
    fn from_report(step: usize, r: &SolveReport, time_s: f64, ritz: Vec<f64>) -> Self {
        Self {
            step,
            iterations: r.iterations,
            converged: r.converged,
            relres0: r.relres_initial(),
            relres_final: r.relres_final(),
            time_s,
            rhs_norm: r.rhs_norm,
            deflation_size: r.deflation_size,
            residual_history: r.residual_history.clone(),
            ritz_values: ritz,
            corrector_residual: None,
        }
    }
}

/// Table row: statistics over the window, with step 1 reported apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub window_first: usize,
    pub window_last: usize,
    pub min_iters: usize,
    pub max_iters: usize,
    pub mean_iters: f64,
    pub cumulative_iters: usize,
    pub mean_step_time_s: f64,
    pub mean_iter_time_s: f64,
    pub step1_iters: usize,
    pub step1_time_s: f64,
    pub ritz_converged_at: Option<usize>,
    pub all_converged: bool,
    pub iterations_cell: String,
}

/// `min-max(mean)`, with the mean shown as an integer when it is one.
pub fn iterations_cell(min: usize, max: usize, mean: f64) -> String {
    if mean.fract() == 0.0 {
        format!("{min}-{max}({mean:.0})")
    } else {
        format!("{min}-{max}({mean:.1})")
    }
}

impl SummaryRow {
    /// `mean step time (mean iteration time)` in seconds.
    pub fn time_cell(&self) -> String {
        format!(
            "{:.3e} ({:.3e})",
            self.mean_step_time_s, self.mean_iter_time_s
        )
    }
}

/// Statistics over the 1-based inclusive `window` of `records`.
pub fn summarize(
    records: &[StepRecord],
    window: (usize, usize),
) -> Result<SummaryRow, HarnessError> {
    let (first, last) = window;
    if first == 0 || first > last || last > records.len() {
        return Err(HarnessError::Contract(format!(
            "window {first}..={last} is empty or outside 1..={}",
            records.len()
        )));
    }
    let w = &records[first - 1..last];
    let iters: Vec<usize> = w.iter().map(|r| r.iterations).collect();
    let total: usize = iters.iter().sum();
    let time: f64 = w.iter().map(|r| r.time_s).sum();
    let mean_iters = total as f64 / w.len() as f64;
    let min_iters = *iters.iter().min().unwrap();
    let max_iters = *iters.iter().max().unwrap();
    Ok(SummaryRow {
        window_first: first,
        window_last: last,
        min_iters,
        max_iters,
        mean_iters,
        cumulative_iters: records.iter().map(|r| r.iterations).sum(),
        mean_step_time_s: time / w.len() as f64,
        mean_iter_time_s: if total > 0 { time / total as f64 } else { 0.0 },
        step1_iters: records[0].iterations,
        step1_time_s: records[0].time_s,
        ritz_converged_at: None,
        all_converged: records.iter().all(|r| r.converged),
        iterations_cell: iterations_cell(min_iters, max_iters, mean_iters),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseSummary {
    pub coarse_order: usize,
    pub n_corners: usize,
    pub n_faces: usize,
    pub n_adaptive: usize,
    pub per_subdomain: Vec<usize>,
    pub interface_size: usize,
    pub n_dofs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceRecord {
    pub face: usize,
    pub s: usize,
    pub t: usize,
    pub rows_added: usize,
    pub top_eigenvalues: Vec<f64>,
}

/// Nodal fields of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub step: usize,
    pub columns: Vec<(&'static str, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub mesh: Mesh,
    pub partition: Partition,
    pub steps: Vec<StepRecord>,
    pub summary: SummaryRow,
    pub coarse: CoarseSummary,
    pub faces: Vec<FaceRecord>,
    pub setup_calls: usize,
    pub fields: Vec<FieldDump>,
}

/// Runs the whole experiment on a pool of `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    if cfg.workers == 0 {
        return run_inner(cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    pool.install(|| run_inner(cfg))
}

struct Clock {
    enabled: bool,
}

impl Clock {
    fn time<T>(&self, f: impl FnOnce() -> T) -> (T, f64) {
        let start = Instant::now();
        let out = f();
        let t = if self.enabled {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        (out, t)
    }
}

/// Corrector solver that records the report and wall time of each call.
struct Recording<'a> {
    solver: &'a mut SequenceSolver,
    clock: &'a Clock,
    last: Option<(SolveReport, f64)>,
}

impl PoissonSolver for Recording<'_> {
    fn solve(&mut self, rhs: &[f64]) -> ddseq_core::Result<Vec<f64>> {
        let (res, t) = self.clock.time(|| self.solver.solve(rhs));
        let (x, report) = res?;
        self.last = Some((report, t));
        Ok(x)
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let clock = Clock {
        enabled: cfg.timings,
    };
    let mesh = build_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly).map_err(HarnessError::Setup)?;
    let partition = partition_boxes(&mesh, cfg.px, cfg.py).map_err(HarnessError::Setup)?;
    let bc = cfg.boundary_condition(&mesh);
    let solver_cfg = cfg.solver().map_err(HarnessError::Setup)?;
    let (solver, setup_time) =
        clock.time(|| SequenceSolver::new(&mesh, &partition, &bc, solver_cfg));
    let mut solver = solver.map_err(HarnessError::Setup)?;

    let mut steps = Vec::with_capacity(cfg.steps);
    let mut fields = Vec::new();
    let dump = |k: usize| cfg.field_stride > 0 && k.is_multiple_of(cfg.field_stride);

    match cfg.mode {
        SequenceMode::SyntheticTransient | SequenceMode::SyntheticPeriodic => {
            let seq =
                SyntheticSequence::new(&cfg.sequence(), &mesh).map_err(HarnessError::Setup)?;
            for k in 0..cfg.steps {
                let step = k + 1;
                let f = solver.dof_map().restrict(&seq.rhs(k));
                let (res, t) = clock.time(|| solver.solve(&f));
                let (x, report) = res.map_err(|source| HarnessError::Step { step, source })?;
                let ritz = solver.deflation().ritz_values().to_vec();
                steps.push(StepRecord::from_report(step, &report, t, ritz));
                if dump(step) {
                    let u = solver.dof_map().extend(&x, &bc);
                    fields.push(FieldDump {
                        step,
                        columns: vec![("u", u)],
                    });
                }
            }
        }
        SequenceMode::Flow2d => {
            let problem =
                FlowProblem::new(&mesh, bc.clone(), cfg.dt, cfg.nu).map_err(HarnessError::Setup)?;
            let nu = cfg.nu;
            let vbc = move |x: f64, y: f64, t: f64| taylor_green_velocity(x, y, t, nu);
            let mut state =
                FlowState::at_rest(&mesh, cfg.dt, cfg.nu).map_err(HarnessError::Setup)?;
            for (node, &[x, y]) in mesh.coords.iter().enumerate() {
                let [u, v] = vbc(x, y, 0.0);
                state.u[0][node] = u;
                state.u[1][node] = v;
                state.p[node] = taylor_green_pressure(x, y, 0.0, nu);
            }
            for k in 0..cfg.steps {
                let step = k + 1;
                let mut rec = Recording {
                    solver: &mut solver,
                    clock: &clock,
                    last: None,
                };
                let (next, flow_report) = flow_step(&problem, &state, &vbc, &mut rec)
                    .map_err(|source| HarnessError::Step { step, source })?;
                let (report, t) = rec.last.take().ok_or_else(|| {
                    HarnessError::Contract("flow step did not call the corrector solver".into())
                })?;
                let ritz = solver.deflation().ritz_values().to_vec();
                let mut record = StepRecord::from_report(step, &report, t, ritz);
                record.corrector_residual = Some(flow_report.corrector_residual);
                steps.push(record);
                state = next;
                if dump(step) {
                    fields.push(FieldDump {
                        step,
                        columns: vec![
                            ("u", state.u[0].clone()),
                            ("v", state.u[1].clone()),
                            ("p", state.p.clone()),
                        ],
                    });
                }
            }
        }
    }
    if let Some(first) = steps.first_mut() {
        first.time_s += setup_time;
    }

    let mut summary = summarize(&steps, cfg.window())?;
    summary.ritz_converged_at = solver.ritz_frozen_at();
    let diag = diagnostics(solver.constraints());
    let coarse = CoarseSummary {
        coarse_order: diag.coarse_order,
        n_corners: diag.n_corners,
        n_faces: diag.n_faces,
        n_adaptive: diag.n_adaptive,
        per_subdomain: diag.per_subdomain,
        interface_size: solver.interface_map().size(),
        n_dofs: solver.dof_map().n_dofs(),
    };
    let faces = solver
        .face_reports()
        .iter()
        .map(|r| FaceRecord {
            face: r.face,
            s: r.s,
            t: r.t,
            rows_added: r.rows_added,
            top_eigenvalues: r.top_eigenvalues.clone(),
        })
        .collect();
    Ok(ExperimentOutput {
        config: cfg.clone(),
        mesh,
        partition,
        steps,
        summary,
        coarse,
        faces,
        setup_calls: solver.setup_calls(),
        fields,
    })
}
