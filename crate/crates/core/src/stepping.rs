//! Time-stepping configuration, trajectories and the lagged inner loop
//! shared by the finite-difference and Galerkin solvers.

use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::grid::{GridError, GridFunction};
use crate::linalg::LinalgError;
use crate::problem::ProblemSpec;

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_MAX: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("failed to evaluate {what} at t = {t}: {source}")]
    Eval {
        what: &'static str,
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("inner iteration did not converge in step starting at t = {t} after {iterations} iterations (last increment {residual:e})")]
    InnerNotConverged {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("Newton iteration stagnated at residual {residual:e} after {iterations} iterations")]
    NewtonStagnated { iterations: usize, residual: f64 },
    #[error("Newton iteration reached {iterations} iterations with residual {residual:e}")]
    NewtonMaxIterations { iterations: usize, residual: f64 },
}

impl SolveError {
    pub(crate) fn eval(what: &'static str, t: f64) -> impl Fn(EvalError) -> SolveError {
        move |source| SolveError::Eval { what, t, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    /// Exact exponential propagation of the frozen linear system through
    /// an eigendecomposition of its matrix.
    Eigen,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fdm,
    Galerkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub stepper: StepperKind,
    pub inner_tol: f64,
    pub inner_max: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, stepper: StepperKind) -> Result<Self, SolveError> {
        let cfg = Self {
            dt,
            stepper,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max: DEFAULT_INNER_MAX,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolveError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(SolveError::Config(format!(
                "inner_tol must be positive, got {}",
                self.inner_tol
            )));
        }
        if self.inner_max == 0 {
            return Err(SolveError::Config("inner_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: GridFunction,
    pub inner_iterations: usize,
    /// Sup-norm change between successive inner iterates.
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerStats {
    pub steps: usize,
    pub total: usize,
    pub max: usize,
    pub mean: f64,
}

/// Snapshots at every time level, including `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    /// Inner iterations of each step; one shorter than `times`.
    pub inner_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<GridFunction>) -> Result<Self, SolveError> {
        if times.is_empty() || times.len() != states.len() {
            return Err(SolveError::Config(
                "a trajectory needs one state per time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolveError::Config("trajectory times must increase".into()));
        }
        for s in &states[1..] {
            states[0].check_same_grid(s)?;
        }
        let steps = times.len() - 1;
        Ok(Self {
            times,
            states,
            inner_iterations: vec![0; steps],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.states[0].n_cells()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("non-empty trajectory")
    }

    /// Index of the snapshot closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn inner_stats(&self) -> InnerStats {
        let steps = self.inner_iterations.len();
        let total: usize = self.inner_iterations.iter().sum();
        InnerStats {
            steps,
            total,
            max: self.inner_iterations.iter().copied().max().unwrap_or(0),
            mean: if steps == 0 { 0.0 } else { total as f64 / steps as f64 },
        }
    }
}

/// Time levels `0, dt, 2dt, ..., T`. When `T/dt` is not an integer the
/// last step is shortened to land on `T`.
pub fn time_levels(horizon: f64, dt: f64) -> Vec<f64> {
    let ratio = horizon / dt;
    let rounded = ratio.round();
    let n = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    };
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    times.push(horizon);
    times
}

/// Lagged fixed-point loop: `solve(lag)` returns the next iterate given
/// the previous one, starting from `start`. Stops when the sup-norm
/// increment is at most `tol`. When the lagged term does not depend on
/// the state, one solve is exact.
pub(crate) fn lag_iterate(
    start: &[f64],
    t: f64,
    cfg: &StepperConfig,
    state_independent: bool,
    mut solve: impl FnMut(&[f64]) -> Result<Vec<f64>, SolveError>,
) -> Result<(Vec<f64>, usize, Vec<f64>), SolveError> {
    let mut lag = start.to_vec();
    let mut increments = Vec::new();
    for n in 1..=cfg.inner_max {
        let next = solve(&lag)?;
        let inc = next
            .iter()
            .zip(&lag)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if !inc.is_finite() {
            return Err(SolveError::InnerNotConverged {
                t,
                iterations: n,
                residual: inc,
            });
        }
        increments.push(inc);
        lag = next;
        if state_independent || inc <= cfg.inner_tol {
            return Ok((lag, n, increments));
        }
    }
    Err(SolveError::InnerNotConverged {
        t,
        iterations: cfg.inner_max,
        residual: *increments.last().unwrap_or(&f64::NAN),
    })
}

/// Samples `u0` at the nodes of an `n`-cell grid.
pub fn initial_state(spec: &ProblemSpec, n: usize) -> Result<GridFunction, SolveError> {
    let h = 1.0 / n as f64;
    let values = (0..=n)
        .map(|k| spec.u0(k as f64 * h).map_err(SolveError::eval("u0", 0.0)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridFunction::new(values)?)
}

/// Solves with either discretization; `n` is the number of cells.
pub fn solve(
    spec: &ProblemSpec,
    method: Method,
    n: usize,
    cfg: &StepperConfig,
) -> Result<Trajectory, SolveError> {
    match method {
        Method::Fdm => crate::fdm::solve(spec, n, cfg),
        Method::Galerkin => crate::galerkin::solve(spec, n, cfg),
    }
}
