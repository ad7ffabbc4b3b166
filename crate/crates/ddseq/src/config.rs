//! Flat `key=value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Keys are dotted
//! (`deflation.R = 50`) and unknown keys are rejected.

use std::fmt;
use std::path::Path;

use ddseq_core::adaptive::AdaptiveConfig;
use ddseq_core::bddc::WeightScheme;
use ddseq_core::flowseq::{SequenceConfig, SequenceMode};
use ddseq_core::krylov::{StopKind, StoppingRule, Strategy};
use ddseq_core::mesh::{BoundaryCondition, Edge, Mesh};
use ddseq_core::solver::SolverConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub px: usize,
    pub py: usize,
    /// Dirichlet edges; empty means only the corner node at the origin is
    /// pinned.
    pub dirichlet: Vec<Edge>,
    pub stop_kind: StopKind,
    pub tol: f64,
    pub max_iters: usize,
    pub warm_start: bool,
    pub strategy: Strategy,
    pub deflation_size: usize,
    pub weights: WeightScheme,
    pub adaptive: bool,
    pub tau: f64,
    pub max_vectors_per_face: usize,
    pub mode: SequenceMode,
    pub steps: usize,
    pub decay: f64,
    pub amplitude: f64,
    pub period: usize,
    pub seed: u64,
    pub dt: f64,
    pub nu: f64,
    /// Statistics window, 1-based and inclusive; `None` means the default.
    pub stats_first: Option<usize>,
    pub stats_last: Option<usize>,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    /// Write measured times; when off, time columns are zero.
    pub timings: bool,
    /// Dump nodal fields every this many steps; 0 disables.
    pub field_stride: usize,
    /// Write `nodes.csv` and `elements.csv`.
    pub dump_mesh: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
            px: 4,
            py: 4,
            dirichlet: vec![Edge::Left],
            stop_kind: StopKind::RelativeToRhs,
            tol: 1e-6,
            max_iters: 500,
            warm_start: true,
            strategy: Strategy::None,
            deflation_size: 50,
            weights: WeightScheme::Card,
            adaptive: false,
            tau: 3.0,
            max_vectors_per_face: 10,
            mode: SequenceMode::SyntheticTransient,
            steps: 200,
            decay: 30.0,
            amplitude: 1.0,
            period: 50,
            seed: 42,
            dt: 0.05,
            nu: 0.01,
            stats_first: None,
            stats_last: None,
            workers: 1,
            timings: true,
            field_stride: 0,
            dump_mesh: false,
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_edge(s: &str) -> Option<Edge> {
    match s {
        "left" => Some(Edge::Left),
        "right" => Some(Edge::Right),
        "bottom" => Some(Edge::Bottom),
        "top" => Some(Edge::Top),
        _ => None,
    }
}

fn edge_name(e: Edge) -> &'static str {
    match e {
        Edge::Left => "left",
        Edge::Right => "right",
        Edge::Bottom => "bottom",
        Edge::Top => "top",
    }
}

pub fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::None => "none",
        Strategy::B1 => "b1",
        Strategy::B2 => "b2",
        Strategy::B3 => "b3",
        Strategy::B4 => "b4",
    }
}

pub fn mode_name(m: SequenceMode) -> &'static str {
    match m {
        SequenceMode::SyntheticTransient => "synthetic_transient",
        SequenceMode::SyntheticPeriodic => "synthetic_periodic",
        SequenceMode::Flow2d => "flow2d",
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: no + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: std::str::FromStr>(
            v: &str,
            bad: impl Fn() -> ConfigError,
        ) -> Result<T, ConfigError> {
            v.parse().map_err(|_| bad())
        }
        match key {
            "mesh.nx" => self.nx = num(value, bad)?,
            "mesh.ny" => self.ny = num(value, bad)?,
            "mesh.lx" => self.lx = num(value, bad)?,
            "mesh.ly" => self.ly = num(value, bad)?,
            "partition.px" => self.px = num(value, bad)?,
            "partition.py" => self.py = num(value, bad)?,
            "bc.dirichlet" if value == "corner" => self.dirichlet.clear(),
            "bc.dirichlet" => {
                self.dirichlet = value
                    .split(',')
                    .map(|s| parse_edge(s.trim()).ok_or_else(bad))
                    .collect::<Result<_, _>>()?
            }
            "stopping.kind" => {
                self.stop_kind = match value {
                    "relative_to_initial" => StopKind::RelativeToInitial,
                    "relative_to_rhs" => StopKind::RelativeToRhs,
                    _ => return Err(bad()),
                }
            }
            "stopping.tol" => self.tol = num(value, bad)?,
            "stopping.max_iters" => self.max_iters = num(value, bad)?,
            "warm_start" => self.warm_start = parse_bool(value).ok_or_else(bad)?,
            "deflation.strategy" => {
                self.strategy = match value.to_ascii_lowercase().as_str() {
                    "none" => Strategy::None,
                    "b1" => Strategy::B1,
                    "b2" => Strategy::B2,
                    "b3" => Strategy::B3,
                    "b4" => Strategy::B4,
                    _ => return Err(bad()),
                }
            }
            "deflation.R" => self.deflation_size = num(value, bad)?,
            "bddc.weights" => {
                self.weights = match value {
                    "card" => WeightScheme::Card,
                    "diag" => WeightScheme::Diag,
                    _ => return Err(bad()),
                }
            }
            "bddc.adaptive" => self.adaptive = parse_bool(value).ok_or_else(bad)?,
            "bddc.tau" => self.tau = num(value, bad)?,
            "bddc.max_vectors_per_face" => self.max_vectors_per_face = num(value, bad)?,
            "sequence.mode" => {
                self.mode = match value {
                    "synthetic_transient" => SequenceMode::SyntheticTransient,
                    "synthetic_periodic" => SequenceMode::SyntheticPeriodic,
                    "flow2d" => SequenceMode::Flow2d,
                    _ => return Err(bad()),
                }
            }
            "sequence.steps" => self.steps = num(value, bad)?,
            "sequence.decay" => self.decay = num(value, bad)?,
            "sequence.amplitude" => self.amplitude = num(value, bad)?,
            "sequence.period" => self.period = num(value, bad)?,
            "sequence.seed" => self.seed = num(value, bad)?,
            "flow.dt" => self.dt = num(value, bad)?,
            "flow.nu" => self.nu = num(value, bad)?,
            "stats.first" => self.stats_first = Some(num(value, bad)?),
            "stats.last" => self.stats_last = Some(num(value, bad)?),
            "workers" => self.workers = num(value, bad)?,
            "output.timings" => self.timings = parse_bool(value).ok_or_else(bad)?,
            "output.field_stride" => self.field_stride = num(value, bad)?,
            "output.mesh" => self.dump_mesh = parse_bool(value).ok_or_else(bad)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks the cross-field constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.nx == 0 || self.ny == 0 || !(self.lx > 0.0) || !(self.ly > 0.0) {
            return invalid("mesh sizes must be positive");
        }
        if self.px == 0
            || self.py == 0
            || !self.nx.is_multiple_of(self.px)
            || !self.ny.is_multiple_of(self.py)
        {
            return invalid("partition must divide the mesh evenly");
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return invalid("stopping tolerance and max_iters must be positive");
        }
        if self.adaptive && !(self.tau > 1.0) {
            return invalid("bddc.tau must exceed 1");
        }
        if self.steps == 0 {
            return invalid("sequence.steps must be at least 1");
        }
        if !(self.decay > 0.0) || self.period == 0 {
            return invalid("sequence.decay and sequence.period must be positive");
        }
        if !(self.dt > 0.0) || !(self.nu > 0.0) {
            return invalid("flow.dt and flow.nu must be positive");
        }
        let (first, last) = self.window();
        if first < 1 || last > self.steps || first > last {
            return invalid("stats window must lie within [1, steps]");
        }
        if first == 1 && self.steps > 1 {
            return invalid("step 1 includes the setup and cannot be in the stats window");
        }
        Ok(())
    }

    /// Statistics window: steps 2..=steps by default, or step 1 alone for
    /// single-step runs.
    pub fn window(&self) -> (usize, usize) {
        let default_first = if self.steps > 1 { 2 } else { 1 };
        (
            self.stats_first.unwrap_or(default_first),
            self.stats_last.unwrap_or(self.steps),
        )
    }

    pub fn boundary_condition(&self, mesh: &Mesh) -> BoundaryCondition {
        if self.dirichlet.is_empty() {
            let mut bc = BoundaryCondition::neumann(mesh);
            bc.set_dirichlet(0, 0.0);
            bc
        } else {
            BoundaryCondition::dirichlet_on(mesh, &self.dirichlet, 0.0)
        }
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule::new(self.stop_kind, self.tol).with_max_iters(self.max_iters)
    }

    pub fn sequence(&self) -> SequenceConfig {
        SequenceConfig {
            mode: self.mode,
            steps: self.steps,
            decay: self.decay,
            amplitude: self.amplitude,
            period: self.period,
            seed: self.seed,
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, ddseq_core::Error> {
        let adaptive = if self.adaptive {
            Some(AdaptiveConfig::new(self.tau)?.with_max_vectors(self.max_vectors_per_face))
        } else {
            None
        };
        Ok(SolverConfig {
            rule: self.stopping_rule(),
            warm_start: self.warm_start,
            strategy: self.strategy,
            deflation_size: self.deflation_size,
            weights: self.weights,
            adaptive,
        })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<&str> = self.dirichlet.iter().map(|&e| edge_name(e)).collect();
        writeln!(f, "mesh.nx = {}", self.nx)?;
        writeln!(f, "mesh.ny = {}", self.ny)?;
        writeln!(f, "mesh.lx = {}", self.lx)?;
        writeln!(f, "mesh.ly = {}", self.ly)?;
        writeln!(f, "partition.px = {}", self.px)?;
        writeln!(f, "partition.py = {}", self.py)?;
        if edges.is_empty() {
            writeln!(f, "bc.dirichlet = corner")?;
        } else {
            writeln!(f, "bc.dirichlet = {}", edges.join(","))?;
        }
        let kind = match self.stop_kind {
            StopKind::RelativeToInitial => "relative_to_initial",
            StopKind::RelativeToRhs => "relative_to_rhs",
        };
        writeln!(f, "stopping.kind = {kind}")?;
        writeln!(f, "stopping.tol = {:e}", self.tol)?;
        writeln!(f, "stopping.max_iters = {}", self.max_iters)?;
        writeln!(f, "warm_start = {}", self.warm_start)?;
        writeln!(f, "deflation.strategy = {}", strategy_name(self.strategy))?;
        writeln!(f, "deflation.R = {}", self.deflation_size)?;
        let w = match self.weights {
            WeightScheme::Card => "card",
            WeightScheme::Diag => "diag",
        };
        writeln!(f, "bddc.weights = {w}")?;
        writeln!(f, "bddc.adaptive = {}", self.adaptive)?;
        writeln!(f, "bddc.tau = {}", self.tau)?;
        writeln!(
            f,
            "bddc.max_vectors_per_face = {}",
            self.max_vectors_per_face
        )?;
        writeln!(f, "sequence.mode = {}", mode_name(self.mode))?;
        writeln!(f, "sequence.steps = {}", self.steps)?;
        writeln!(f, "sequence.decay = {}", self.decay)?;
        writeln!(f, "sequence.amplitude = {}", self.amplitude)?;
        writeln!(f, "sequence.period = {}", self.period)?;
        writeln!(f, "sequence.seed = {}", self.seed)?;
        writeln!(f, "flow.dt = {}", self.dt)?;
        writeln!(f, "flow.nu = {}", self.nu)?;
        let (first, last) = self.window();
        writeln!(f, "stats.first = {first}")?;
        writeln!(f, "stats.last = {last}")?;
        writeln!(f, "workers = {}", self.workers)?;
        writeln!(f, "output.timings = {}", self.timings)?;
        writeln!(f, "output.field_stride = {}", self.field_stride)?;
        write!(f, "output.mesh = {}", self.dump_mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# recycling run\nmesh.nx = 16\nmesh.ny=16\npartition.px = 2\npartition.py = 2\n\
             deflation.strategy = B4 # largest\ndeflation.R = 20\nsequence.steps = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.nx, 16);
        assert_eq!(cfg.strategy, Strategy::B4);
        assert_eq!(cfg.deflation_size, 20);
        assert_eq!(cfg.window(), (2, 10));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::parse("mesh.nz = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "mesh.nz"));
    }

    #[test]
    fn window_must_skip_setup_step() {
        assert!(ExperimentConfig::parse("stats.first = 1\n").is_err());
        assert!(ExperimentConfig::parse("sequence.steps = 1\nstats.first = 1\n").is_ok());
    }

    #[test]
    fn corner_pin_round_trips() {
        let cfg = ExperimentConfig::parse("bc.dirichlet = corner\n").unwrap();
        assert!(cfg.dirichlet.is_empty());
        assert_eq!(
            ExperimentConfig::parse(&cfg.to_string()).unwrap().dirichlet,
            vec![]
        );
    }

    #[test]
    fn display_round_trips() {
        let cfg = ExperimentConfig {
            dirichlet: vec![Edge::Bottom, Edge::Top],
            tol: 1e-8,
            ..ExperimentConfig::default()
        };
        let again = ExperimentConfig::parse(&cfg.to_string()).unwrap();
        let mut expected = cfg.clone();
        expected.stats_first = Some(2);
        expected.stats_last = Some(200);
        assert_eq!(again, expected);
    }
}
