//! The `solve` and `steady` commands.

use std::io::{self, Write};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use robin_heat::analysis::{manufactured_error, AnalysisError};
use robin_heat::fdm::steady_fd;
use robin_heat::galerkin::FemBasis;
use robin_heat::grid::GridFunction;
use robin_heat::newton::NewtonConfig;
use robin_heat::problem::{validate_hypotheses, AsymptoticLimits, HypothesisFamily};
use robin_heat::stationary::{solve_stationary, StationaryProblem};
use robin_heat::stepping::{self, InnerStats, Method, SolveError, StepperKind, Trajectory};

use crate::config::{ConfigError, Path, RunConfig};
use crate::output::{write_steady, write_surface};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solve(#[from] SolveError),
    #[error("analysis failure: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("i/o error on {target}: {source}")]
    Io {
        target: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solve(_) | CliError::Analysis(_) => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn io(target: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let target = target.into();
        move |source| CliError::Io { target, source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub worst_max_node: f64,
    pub worst_at: f64,
    pub final_max_node: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub command: &'static str,
    pub method: Method,
    pub stepper: StepperKind,
    pub nx: usize,
    pub dt: f64,
    pub horizon: f64,
    pub snapshots: usize,
    pub rows: usize,
    pub inner_iterations: InnerStats,
    /// Existence hypotheses that the sample audit could not confirm.
    pub unconfirmed_hypotheses: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorSummary>,
    pub wall_time_s: f64,
}

/// Runs the configured time-dependent solve.
pub fn trajectory(cfg: &RunConfig) -> Result<Trajectory, SolveError> {
    stepping::solve(&cfg.problem, cfg.method, cfg.nx, &cfg.stepper)
}

/// Solves and writes the surface CSV to `csv`.
pub fn cmd_solve(cfg: &RunConfig, csv: &mut dyn Write) -> Result<SolveReport, CliError> {
    let start = Instant::now();
    let traj = trajectory(cfg)?;
    let rows = write_surface(&traj, csv).map_err(CliError::io("surface CSV"))?;
    let error = match &cfg.exact {
        None => None,
        Some(exact) => {
            let r = manufactured_error(&traj, exact)?;
            let (at, worst) = r
                .max_node
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc });
            Some(ErrorSummary {
                worst_max_node: worst,
                worst_at: r.times[at],
                final_max_node: r.final_max_node(),
            })
        }
    };
    let hypotheses = validate_hypotheses(&cfg.problem, None, HypothesisFamily::Existence);
    Ok(SolveReport {
        command: "solve",
        method: cfg.method,
        stepper: cfg.stepper.stepper,
        nx: cfg.nx,
        dt: cfg.dt(),
        horizon: cfg.horizon(),
        snapshots: traj.len(),
        rows,
        inner_iterations: traj.inner_stats(),
        unconfirmed_hypotheses: hypotheses
            .checks
            .iter()
            .filter(|c| c.verdict != robin_heat::problem::Verdict::Satisfied)
            .map(|c| c.id)
            .collect(),
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyReport {
    pub command: &'static str,
    pub method: Method,
    pub nx: usize,
    pub residual_sup: f64,
    pub newton_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard_fallback: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness_guaranteed: Option<bool>,
    pub wall_time_s: f64,
}

pub fn require_limits(cfg: &RunConfig, what: &str) -> Result<AsymptoticLimits, ConfigError> {
    cfg.limits
        .clone()
        .ok_or_else(|| ConfigError::new(&Path::root().key("asymptotic"), format!("required by {what}")))
}

/// Steady state of the limit problem with the configured method, plus its
/// report.
pub fn steady_state(cfg: &RunConfig) -> Result<(GridFunction, SteadyReport), CliError> {
    let start = Instant::now();
    let limits = require_limits(cfg, "the steady solve")?;
    let spec = &cfg.problem;
    let (h0, h1) = (spec.boundary.h0, spec.boundary.h1);
    let newton = NewtonConfig::default();
    let (values, mut report) = match cfg.method {
        Method::Fdm => {
            let s = steady_fd(&limits, &spec.f, h0, h1, cfg.nx, newton.tol)?;
            let report = SteadyReport {
                command: "steady",
                method: cfg.method,
                nx: cfg.nx,
                residual_sup: s.residual_sup,
                newton_iters: s.newton_iters,
                picard_fallback: None,
                uniqueness_guaranteed: None,
                wall_time_s: 0.0,
            };
            (s.values, report)
        }
        Method::Galerkin => {
            let prob = StationaryProblem::new(limits, spec.f.clone(), h0, h1)
                .map_err(|e| ConfigError::new(&Path::root().key("problem"), e.to_string()))?;
            let s = solve_stationary(&prob, &FemBasis::new(cfg.nx)?, &newton)?;
            let report = SteadyReport {
                command: "steady",
                method: cfg.method,
                nx: cfg.nx,
                residual_sup: s.residual_sup,
                newton_iters: s.newton_iters,
                picard_fallback: Some(s.picard_fallback),
                uniqueness_guaranteed: Some(s.uniqueness_guaranteed),
                wall_time_s: 0.0,
            };
            (s.values, report)
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((values, report))
}

/// Solves the limit problem and writes the `x,u_inf` CSV to `csv`.
pub fn cmd_steady(cfg: &RunConfig, csv: &mut dyn Write) -> Result<SteadyReport, CliError> {
    let (values, report) = steady_state(cfg)?;
    write_steady(&values, csv).map_err(CliError::io("steady CSV"))?;
    Ok(report)
}
