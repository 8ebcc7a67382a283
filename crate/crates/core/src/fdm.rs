//! Finite differences in space with the Robin conditions eliminated
//! through one-sided differences, giving an ODE system for the interior
//! unknowns `u_1 .. u_{N-1}`:
//!
//! ```text
//! u_0 = (u_1 - h g0(t)) / (1 + h h0),   u_N = (u_{N-1} - h g1(t)) / (1 + h h1)
//! ```
//!
//! The nonlinear term is lagged and iterated to a fixed point within each
//! step; each linear step is either propagated exactly through an
//! eigendecomposition or taken with backward Euler.

use crate::expr::EvalError;
use crate::grid::GridFunction;
use crate::linalg::{EigenPropagator, TriDiag};
use crate::newton::{damped_newton, NewtonConfig};
use crate::problem::{AsymptoticLimits, ProblemSpec, ScalarNonlinearity};
use crate::stepping::{
    initial_state, lag_iterate, time_levels, SolveError, StepOutcome, StepperConfig, StepperKind,
    Trajectory,
};

/// `(u_0, u_N)` recovered from the interior neighbours.
pub fn eliminate_boundary(
    u1: f64,
    u_nm1: f64,
    t: f64,
    spec: &ProblemSpec,
    h: f64,
) -> Result<(f64, f64), EvalError> {
    let b = &spec.boundary;
    Ok(eliminate(u1, u_nm1, b.g0(t)?, b.g1(t)?, b.h0, b.h1, h))
}

fn eliminate(u1: f64, u_nm1: f64, g0: f64, g1: f64, h0: f64, h1: f64, h: f64) -> (f64, f64) {
    ((u1 - h * g0) / (1.0 + h * h0), (u_nm1 - h * g1) / (1.0 + h * h1))
}

/// The linear system `u' = A u + b` for the interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiDiscrete {
    pub a: TriDiag,
    pub b: Vec<f64>,
}

/// Matrix plus the coefficients multiplying `g0` in the first row and
/// `g1` in the last.
#[derive(Debug, Clone)]
struct Operator {
    a: TriDiag,
    left: f64,
    right: f64,
}

fn operator(
    n: usize,
    h0: f64,
    h1: f64,
    mut mu: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<Operator, EvalError> {
    let h = 1.0 / n as f64;
    let h2 = h * h;
    // mu at x_{k+1/2}, k = 0..N-1
    let half = (0..n)
        .map(|k| mu((k as f64 + 0.5) * h))
        .collect::<Result<Vec<_>, _>>()?;
    let m = n - 1;
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m - 1];
    for i in 0..m {
        let k = i + 1;
        diag[i] = -(half[k] + half[k - 1]) / h2;
        if i + 1 < m {
            sup[i] = half[k] / h2;
        }
    }
    let left_den = h * (1.0 + h * h0);
    let right_den = h * (1.0 + h * h1);
    diag[0] = -half[1] / h2 - half[0] * h0 / left_den;
    diag[m - 1] = -half[m - 1] / h2 - half[m] * h1 / right_den;
    let a = TriDiag::new(sup.clone(), diag, sup).expect("finite operator");
    Ok(Operator {
        a,
        left: -half[0] / left_den,
        right: -half[n - 1] / right_den,
    })
}

fn spec_operator(spec: &ProblemSpec, n: usize, t: f64) -> Result<Operator, SolveError> {
    let b = &spec.boundary;
    operator(n, b.h0, b.h1, |x| spec.mu.eval(x, t)).map_err(SolveError::eval("mu", t))
}

/// Data of the forcing frozen at one time.
struct FrozenData {
    f1: Vec<f64>,
    g0: f64,
    g1: f64,
}

fn frozen_data(spec: &ProblemSpec, n: usize, t: f64) -> Result<FrozenData, SolveError> {
    let h = 1.0 / n as f64;
    let f1 = (1..n)
        .map(|k| spec.f1(k as f64 * h, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SolveError::eval("f1", t))?;
    let g0 = spec.boundary.g0(t).map_err(SolveError::eval("g0", t))?;
    let g1 = spec.boundary.g1(t).map_err(SolveError::eval("g1", t))?;
    Ok(FrozenData { f1, g0, g1 })
}

/// `b` for the interior rows given the full nodal lag vector.
fn forcing(
    op: &Operator,
    data: &FrozenData,
    f: &ScalarNonlinearity,
    lag: &[f64],
    t: f64,
) -> Result<Vec<f64>, SolveError> {
    let m = data.f1.len();
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let fu = f.eval(lag[i + 1]).map_err(SolveError::eval("f", t))?;
        b.push(data.f1[i] - fu);
    }
    b[0] += op.left * data.g0;
    b[m - 1] += op.right * data.g1;
    Ok(b)
}

fn check_cells(n: usize) -> Result<(), SolveError> {
    if n < 3 {
        return Err(SolveError::Config(format!(
            "the finite-difference grid needs at least 3 cells, got {n}"
        )));
    }
    Ok(())
}

/// Assembles `A` and `b` at time `t` with the nonlinear term evaluated at
/// `u_lag`.
pub fn assemble(
    spec: &ProblemSpec,
    n: usize,
    t: f64,
    u_lag: &GridFunction,
) -> Result<SemiDiscrete, SolveError> {
    check_cells(n)?;
    if u_lag.n_cells() != n {
        return Err(SolveError::Config(format!(
            "lag state has {} cells, expected {n}",
            u_lag.n_cells()
        )));
    }
    let op = spec_operator(spec, n, t)?;
    let data = frozen_data(spec, n, t)?;
    let b = forcing(&op, &data, &spec.f, u_lag.values(), t)?;
    Ok(SemiDiscrete { a: op.a, b })
}

/// Advances `u' = A u + b` with constant `A`, `b` over `dt`.
pub fn advance_linear(
    a: &TriDiag,
    b: &[f64],
    u: &[f64],
    dt: f64,
    stepper: StepperKind,
) -> Result<Vec<f64>, SolveError> {
    match stepper {
        StepperKind::Eigen => Ok(EigenPropagator::new(a)?.propagate(u, b, dt)?),
        StepperKind::BackwardEuler => backward_euler(a, b, u, dt),
    }
}

fn backward_euler(a: &TriDiag, b: &[f64], u: &[f64], dt: f64) -> Result<Vec<f64>, SolveError> {
    let rhs: Vec<f64> = u.iter().zip(b).map(|(x, y)| x + dt * y).collect();
    Ok(a.shifted(1.0, -dt).solve(&rhs)?)
}

/// Finite-difference solver for one problem and grid. The operator and
/// its eigendecomposition are reused across steps when `mu` does not
/// depend on time.
pub struct FdmSolver<'a> {
    spec: &'a ProblemSpec,
    n: usize,
    cfg: StepperConfig,
    cached: Option<(Operator, Option<EigenPropagator>)>,
    decompositions: usize,
}

impl<'a> FdmSolver<'a> {
    pub fn new(spec: &'a ProblemSpec, n: usize, cfg: StepperConfig) -> Result<Self, SolveError> {
        check_cells(n)?;
        cfg.validate()?;
        Ok(Self {
            spec,
            n,
            cfg,
            cached: None,
            decompositions: 0,
        })
    }

    /// Number of eigendecompositions computed so far.
    pub fn decompositions(&self) -> usize {
        self.decompositions
    }

    fn operator_at(&mut self, t: f64) -> Result<(Operator, Option<EigenPropagator>), SolveError> {
        if !self.spec.has_time_dependent_operator() {
            if let Some(c) = &self.cached {
                return Ok(c.clone());
            }
        }
        let op = spec_operator(self.spec, self.n, t)?;
        let prop = match self.cfg.stepper {
            StepperKind::Eigen => {
                self.decompositions += 1;
                Some(EigenPropagator::new(&op.a)?)
            }
            StepperKind::BackwardEuler => None,
        };
        if !self.spec.has_time_dependent_operator() {
            self.cached = Some((op.clone(), prop.clone()));
        }
        Ok((op, prop))
    }

    /// One step from `t` to `t + dt`.
    ///
    /// Forcing and coefficients are frozen at `t + dt/2` for the eigen
    /// stepper and at `t + dt` for backward Euler; boundary nodes are
    /// reconstructed at `t + dt`.
    pub fn step(&mut self, state: &GridFunction, t: f64, dt: f64) -> Result<StepOutcome, SolveError> {
        if state.n_cells() != self.n {
            return Err(SolveError::Config(format!(
                "state has {} cells, expected {}",
                state.n_cells(),
                self.n
            )));
        }
        let t_frozen = match self.cfg.stepper {
            StepperKind::Eigen => t + 0.5 * dt,
            StepperKind::BackwardEuler => t + dt,
        };
        let (op, prop) = self.operator_at(t_frozen)?;
        let data = frozen_data(self.spec, self.n, t_frozen)?;
        let t_end = t + dt;
        let b = &self.spec.boundary;
        let g0_end = b.g0(t_end).map_err(SolveError::eval("g0", t_end))?;
        let g1_end = b.g1(t_end).map_err(SolveError::eval("g1", t_end))?;
        let h = 1.0 / self.n as f64;
        let interior = &state.values()[1..self.n];
        let f = &self.spec.f;
        let (values, count, increments) = lag_iterate(
            state.values(),
            t,
            &self.cfg,
            f.is_state_independent(),
            |lag| {
                let rhs = forcing(&op, &data, f, lag, t_frozen)?;
                let next = match &prop {
                    Some(p) => p.propagate(interior, &rhs, dt)?,
                    None => backward_euler(&op.a, &rhs, interior, dt)?,
                };
                let (u0, un) = eliminate(next[0], next[next.len() - 1], g0_end, g1_end, b.h0, b.h1, h);
                let mut full = Vec::with_capacity(self.n + 1);
                full.push(u0);
                full.extend_from_slice(&next);
                full.push(un);
                Ok(full)
            },
        )?;
        Ok(StepOutcome {
            state: GridFunction::new(values)?,
            inner_iterations: count,
            increments,
        })
    }

    pub fn solve(&mut self) -> Result<Trajectory, SolveError> {
        let times = time_levels(self.spec.horizon, self.cfg.dt);
        let mut states = Vec::with_capacity(times.len());
        let mut inner = Vec::with_capacity(times.len() - 1);
        states.push(initial_state(self.spec, self.n)?);
        for w in times.windows(2) {
            let out = self.step(states.last().expect("initial state"), w[0], w[1] - w[0])?;
            inner.push(out.inner_iterations);
            states.push(out.state);
        }
        let mut traj = Trajectory::new(times, states)?;
        traj.inner_iterations = inner;
        Ok(traj)
    }
}

/// One lagged step from `t` with step `cfg.dt`.
pub fn step_linearized(
    state: &GridFunction,
    t: f64,
    spec: &ProblemSpec,
    cfg: &StepperConfig,
) -> Result<StepOutcome, SolveError> {
    FdmSolver::new(spec, state.n_cells(), *cfg)?.step(state, t, cfg.dt)
}

/// Solves on `[0, T]` with `n` cells, storing every time level.
pub fn solve(spec: &ProblemSpec, n: usize, cfg: &StepperConfig) -> Result<Trajectory, SolveError> {
    FdmSolver::new(spec, n, *cfg)?.solve()
}

/// Finite-difference steady state with its certified residual.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSteady {
    pub values: GridFunction,
    /// Sup norm of the interior residual.
    pub residual_sup: f64,
    pub newton_iters: usize,
}

/// Solves `-(mu_inf u_x)_x + f(u) = f1_inf` with the limit Robin data by
/// damped Newton from `u = 0`.
pub fn steady_fd(
    limits: &AsymptoticLimits,
    f: &ScalarNonlinearity,
    h0: f64,
    h1: f64,
    n: usize,
    tol: f64,
) -> Result<FdSteady, SolveError> {
    check_cells(n)?;
    let h = 1.0 / n as f64;
    let op = operator(n, h0, h1, |x| limits.mu_inf(x)).map_err(SolveError::eval("mu_inf", f64::INFINITY))?;
    let f1 = (1..n)
        .map(|k| limits.f1_inf(k as f64 * h))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SolveError::eval("f1_inf", f64::INFINITY))?;
    let m = n - 1;
    let residual = |u: &[f64]| -> Result<Vec<f64>, SolveError> {
        let au = op.a.mul_vec(u)?;
        let mut r = Vec::with_capacity(m);
        for i in 0..m {
            let fu = f.eval(u[i]).map_err(SolveError::eval("f", f64::INFINITY))?;
            r.push(-au[i] + fu - f1[i]);
        }
        r[0] -= op.left * limits.g0_inf;
        r[m - 1] -= op.right * limits.g1_inf;
        Ok(r)
    };
    let jacobian = |u: &[f64]| -> Result<TriDiag, SolveError> {
        let mut diag = Vec::with_capacity(m);
        for i in 0..m {
            let d = f.derivative(u[i]).map_err(SolveError::eval("f'", f64::INFINITY))?;
            diag.push(-op.a.diag()[i] + d);
        }
        let off: Vec<f64> = op.a.sup().iter().map(|v| -v).collect();
        Ok(TriDiag::new(off.clone(), diag, off)?)
    };
    let cfg = NewtonConfig {
        tol,
        ..NewtonConfig::default()
    };
    let out = damped_newton(vec![0.0; m], &cfg, residual, jacobian)?;
    let (u0, un) = eliminate(out.x[0], out.x[m - 1], limits.g0_inf, limits.g1_inf, h0, h1, h);
    let mut values = Vec::with_capacity(n + 1);
    values.push(u0);
    values.extend_from_slice(&out.x);
    values.push(un);
    Ok(FdSteady {
        values: GridFunction::new(values)?,
        residual_sup: out.residual_sup,
        newton_iters: out.iterations,
    })
}
