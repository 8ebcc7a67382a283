//! Galerkin discretization of the weak form with continuous piecewise
//! linear elements on a uniform mesh, stepped with backward Euler in the
//! linear part and a lagged nonlinear term.
//!
//! For P1 hats the coefficients are the nodal values, so states are
//! stored as [`GridFunction`]s.

use serde::Serialize;

use crate::expr::{Bindings, EvalError, Var};
use crate::forms::form_constants;
use crate::grid::GridFunction;
use crate::linalg::TriDiag;
use crate::problem::{ProblemSpec, ScalarNonlinearity};
use crate::quadrature::{cumulative_trapezoid, trapezoid, GAUSS2_REF};
use crate::sampling::{linspace, t_lattice};
use crate::stepping::{
    initial_state, lag_iterate, time_levels, SolveError, StepOutcome, StepperConfig, Trajectory,
};

/// Hat functions on `M` uniform elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FemBasis {
    elements: usize,
}

impl FemBasis {
    pub fn new(elements: usize) -> Result<Self, SolveError> {
        if elements < 2 {
            return Err(SolveError::Config(format!(
                "the element mesh needs at least 2 elements, got {elements}"
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn n_nodes(&self) -> usize {
        self.elements + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        crate::grid::node(self.elements, j)
    }

    /// Gauss points of element `e` with the local hat values
    /// `(w_e, w_{e+1})` there.
    fn gauss_points(&self, e: usize) -> [(f64, f64, f64); 2] {
        let h = self.h();
        let left = self.node(e);
        GAUSS2_REF.map(|s| (left + s * h, 1.0 - s, s))
    }
}

/// Coefficients and time of a Galerkin solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub coefficients: GridFunction,
    pub t: f64,
}

/// Exact P1 mass matrix.
pub fn assemble_mass(basis: &FemBasis) -> TriDiag {
    let h = basis.h();
    let n = basis.n_nodes();
    let mut diag = vec![4.0 * h / 6.0; n];
    diag[0] = 2.0 * h / 6.0;
    diag[n - 1] = 2.0 * h / 6.0;
    let off = vec![h / 6.0; n - 1];
    TriDiag::new(off.clone(), diag, off).expect("finite mass matrix")
}

/// Stiffness of `⟨mu u_x, v_x⟩ + h0 mu(0) u(0) v(0) + h1 mu(1) u(1) v(1)`
/// with 2-point Gauss quadrature of `mu` on each element.
pub(crate) fn stiffness_with(
    basis: &FemBasis,
    h0: f64,
    h1: f64,
    mut mu: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<TriDiag, EvalError> {
    let h = basis.h();
    let n = basis.n_nodes();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for e in 0..basis.elements() {
        let [(xa, _, _), (xb, _, _)] = basis.gauss_points(e);
        // ∫_e mu w'_i w'_j = ±(1/h²) (h/2)(mu(xa) + mu(xb))
        let k = 0.5 * (mu(xa)? + mu(xb)?) / h;
        diag[e] += k;
        diag[e + 1] += k;
        off[e] -= k;
    }
    diag[0] += h0 * mu(0.0)?;
    diag[n - 1] += h1 * mu(1.0)?;
    Ok(TriDiag::new(off.clone(), diag, off).expect("finite stiffness matrix"))
}

pub fn assemble_stiffness(t: f64, spec: &ProblemSpec, basis: &FemBasis) -> Result<TriDiag, SolveError> {
    let b = &spec.boundary;
    stiffness_with(basis, b.h0, b.h1, |x| spec.mu.eval(x, t)).map_err(SolveError::eval("mu", t))
}

/// `⟨f1, w_j⟩ - ⟨f(u_lag), w_j⟩` by 2-point Gauss per element, with `f`
/// composed with the P1 interpolant of `lag`.
pub(crate) fn load_with(
    basis: &FemBasis,
    f: &ScalarNonlinearity,
    lag: &[f64],
    mut f1: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<Vec<f64>, EvalError> {
    let h = basis.h();
    let mut load = vec![0.0; basis.n_nodes()];
    for e in 0..basis.elements() {
        for (x, wl, wr) in basis.gauss_points(e) {
            let u = wl * lag[e] + wr * lag[e + 1];
            let g = 0.5 * h * (f1(x)? - f.eval(u)?);
            load[e] += g * wl;
            load[e + 1] += g * wr;
        }
    }
    Ok(load)
}

/// Load vector at time `t` including the boundary forcing
/// `-mu(0,t) g0(t)` at node 0 and `-mu(1,t) g1(t)` at node M.
pub fn assemble_load(
    t: f64,
    spec: &ProblemSpec,
    basis: &FemBasis,
    u_lag: &GalerkinState,
) -> Result<Vec<f64>, SolveError> {
    if u_lag.coefficients.n_cells() != basis.elements() {
        return Err(SolveError::Config("lag state does not match the basis".into()));
    }
    full_load(t, spec, basis, u_lag.coefficients.values())
}

fn full_load(t: f64, spec: &ProblemSpec, basis: &FemBasis, lag: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut load =
        load_with(basis, &spec.f, lag, |x| spec.f1(x, t)).map_err(SolveError::eval("f1 or f", t))?;
    let bd = &spec.boundary;
    let mu0 = spec.mu.eval(0.0, t).map_err(SolveError::eval("mu", t))?;
    let mu1 = spec.mu.eval(1.0, t).map_err(SolveError::eval("mu", t))?;
    let n = load.len();
    load[0] -= mu0 * bd.g0(t).map_err(SolveError::eval("g0", t))?;
    load[n - 1] -= mu1 * bd.g1(t).map_err(SolveError::eval("g1", t))?;
    Ok(load)
}

/// Galerkin solver for one problem and mesh. The stiffness matrix is
/// assembled once when `mu` does not depend on time.
pub struct GalerkinSolver<'a> {
    spec: &'a ProblemSpec,
    basis: FemBasis,
    cfg: StepperConfig,
    mass: TriDiag,
    cached_stiffness: Option<TriDiag>,
    stiffness_assemblies: usize,
}

impl<'a> GalerkinSolver<'a> {
    pub fn new(spec: &'a ProblemSpec, basis: FemBasis, cfg: StepperConfig) -> Result<Self, SolveError> {
        cfg.validate()?;
        Ok(Self {
            spec,
            basis,
            cfg,
            mass: assemble_mass(&basis),
            cached_stiffness: None,
            stiffness_assemblies: 0,
        })
    }

    pub fn stiffness_assemblies(&self) -> usize {
        self.stiffness_assemblies
    }

    fn stiffness_at(&mut self, t: f64) -> Result<TriDiag, SolveError> {
        if !self.spec.has_time_dependent_operator() {
            if let Some(k) = &self.cached_stiffness {
                return Ok(k.clone());
            }
        }
        self.stiffness_assemblies += 1;
        let k = assemble_stiffness(t, self.spec, &self.basis)?;
        if !self.spec.has_time_dependent_operator() {
            self.cached_stiffness = Some(k.clone());
        }
        Ok(k)
    }

    /// `M (c+ - c)/dt + K(t+dt) c+ = L(t+dt, lag)`, with the lag iterated
    /// to a fixed point.
    pub fn step(&mut self, state: &GalerkinState, dt: f64) -> Result<(GalerkinState, StepOutcome), SolveError> {
        let c = state.coefficients.values();
        if c.len() != self.basis.n_nodes() {
            return Err(SolveError::Config("state does not match the basis".into()));
        }
        let t_new = state.t + dt;
        let k = self.stiffness_at(t_new)?;
        let system = self.mass.add_scaled(dt, &k)?;
        let mc = self.mass.mul_vec(c)?;
        let (spec, basis) = (self.spec, self.basis);
        let (values, count, increments) = lag_iterate(
            c,
            state.t,
            &self.cfg,
            spec.f.is_state_independent(),
            |lag| {
                let load = full_load(t_new, spec, &basis, lag)?;
                let rhs: Vec<f64> = mc.iter().zip(&load).map(|(a, l)| a + dt * l).collect();
                Ok(system.solve(&rhs)?)
            },
        )?;
        let coefficients = GridFunction::new(values)?;
        let outcome = StepOutcome {
            state: coefficients.clone(),
            inner_iterations: count,
            increments,
        };
        Ok((
            GalerkinState {
                coefficients,
                t: t_new,
            },
            outcome,
        ))
    }

    pub fn solve(&mut self) -> Result<Trajectory, SolveError> {
        let times = time_levels(self.spec.horizon, self.cfg.dt);
        let mut state = GalerkinState {
            coefficients: initial_state(self.spec, self.basis.elements())?,
            t: 0.0,
        };
        let mut states = vec![state.coefficients.clone()];
        let mut inner = Vec::with_capacity(times.len() - 1);
        for w in times.windows(2) {
            let (mut next, out) = self.step(&state, w[1] - w[0])?;
            next.t = w[1];
            inner.push(out.inner_iterations);
            states.push(next.coefficients.clone());
            state = next;
        }
        let mut traj = Trajectory::new(times, states)?;
        traj.inner_iterations = inner;
        Ok(traj)
    }
}

/// One step of size `cfg.dt`.
pub fn step_imex(
    state: &GalerkinState,
    spec: &ProblemSpec,
    basis: &FemBasis,
    cfg: &StepperConfig,
) -> Result<(GalerkinState, StepOutcome), SolveError> {
    GalerkinSolver::new(spec, *basis, *cfg)?.step(state, cfg.dt)
}

/// Solves on `[0, T]` with `m` elements. The stepper kind in `cfg` is
/// ignored; the linear part is always implicit.
pub fn solve(spec: &ProblemSpec, m: usize, cfg: &StepperConfig) -> Result<Trajectory, SolveError> {
    GalerkinSolver::new(spec, FemBasis::new(m)?, *cfg)?.solve()
}

// ---------------------------------------------------------------------------
// Energy traces

/// Discrete energies of a trajectory and the Gronwall bounds they are
/// expected to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    /// `‖u(t)‖² + a0 ∫‖u‖²_{H¹} + 2 C1 ∫‖u‖^p_{L^p}`
    pub s: Vec<f64>,
    /// `a0 ∫_0^t ‖u‖²_{H¹}`
    pub s_h1_integral: Vec<f64>,
    /// `2 C1 ∫_0^t ‖u‖^p_{L^p}`
    pub s_lp_integral: Vec<f64>,
    /// `‖t u(t)‖²_{H¹} + ∫_0^t ‖s u'(s)‖²`
    pub x: Vec<f64>,
    /// `C_T1 exp(∫_0^t ‖f1‖)`
    pub s_bound: Vec<f64>,
    /// `Cbar_T1 exp(∫_0^t Cbar_T2)`
    pub x_bound: Vec<f64>,
    pub c_t1: f64,
    /// `∫_0^T ‖f1(s)‖ ds`
    pub c_t2_integral: f64,
    /// The concrete value used for the generic `C_T` of the second
    /// estimate.
    pub c_t: f64,
    pub cbar_t1: f64,
    pub cbar_t2_integral: f64,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
    pub a0: f64,
    pub s_holds: bool,
    pub x_holds: bool,
    /// Relative slack applied to the `X` comparison.
    pub x_slack: f64,
}

/// Relative slack of the `X` comparison; `u'` is a finite difference.
pub const X_SLACK: f64 = 0.05;
/// Additive slack on the `S` comparison.
pub const S_SLACK: f64 = 1e-6;

fn quad_form(a: &TriDiag, v: &[f64]) -> f64 {
    let av = a.mul_vec(v).expect("matching dimension");
    av.iter().zip(v).map(|(x, y)| x * y).sum()
}

fn lp_norm_p(basis: &FemBasis, v: &[f64], p: f64) -> f64 {
    let h = basis.h();
    let mut s = 0.0;
    for e in 0..basis.elements() {
        for (_, wl, wr) in basis.gauss_points(e) {
            s += 0.5 * h * (wl * v[e] + wr * v[e + 1]).abs().powf(p);
        }
    }
    s
}

/// Evaluates both energy estimates along a Galerkin trajectory.
///
/// Norms are exact for the P1 interpolant (mass and unit stiffness
/// matrices); `‖u‖^p_{L^p}` uses 2-point Gauss. Time integrals use the
/// trapezoid rule over snapshots and `u'` uses centered differences
/// (one-sided at the ends).
pub fn energy_traces(traj: &Trajectory, spec: &ProblemSpec) -> Result<EnergyTrace, SolveError> {
    let basis = FemBasis::new(traj.n_cells())?;
    let g = spec.f.growth();
    let consts = form_constants(spec).map_err(SolveError::eval("mu", 0.0))?;
    let a0 = consts.a0;
    let horizon = spec.horizon;
    let times = traj.times.clone();
    let nt = times.len();
    let mass = assemble_mass(&basis);
    let unit = stiffness_with(&basis, 0.0, 0.0, |_| Ok(1.0)).expect("constant coefficient");

    let l2_sq: Vec<f64> = traj.states.iter().map(|s| quad_form(&mass, s.values())).collect();
    let h1_sq: Vec<f64> = traj
        .states
        .iter()
        .zip(&l2_sq)
        .map(|(s, l2)| l2 + quad_form(&unit, s.values()))
        .collect();
    let lp: Vec<f64> = traj.states.iter().map(|s| lp_norm_p(&basis, s.values(), g.p)).collect();
    let s_h1_integral: Vec<f64> = cumulative_trapezoid(&times, &h1_sq).iter().map(|v| a0 * v).collect();
    let s_lp_integral: Vec<f64> = cumulative_trapezoid(&times, &lp).iter().map(|v| 2.0 * g.c1 * v).collect();
    let s: Vec<f64> = (0..nt).map(|i| l2_sq[i] + s_h1_integral[i] + s_lp_integral[i]).collect();

    // data norms: f1 in L2(0,1) at each snapshot time on a fine x grid
    let xs = linspace(0.0, 1.0, 401);
    let f1_norm = |t: f64| -> Result<f64, SolveError> {
        let sq = xs
            .iter()
            .map(|&x| spec.f1(x, t).map(|v| v * v))
            .collect::<Result<Vec<_>, _>>()
            .map_err(SolveError::eval("f1", t))?;
        Ok(trapezoid(&xs, &sq).sqrt())
    };
    let f1_norms = times.iter().map(|&t| f1_norm(t)).collect::<Result<Vec<_>, _>>()?;
    let f1_cumulative = cumulative_trapezoid(&times, &f1_norms);
    let f1_l1 = *f1_cumulative.last().expect("non-empty");
    let f1_sq: Vec<f64> = f1_norms.iter().map(|v| v * v).collect();
    let f1_l2_sq = trapezoid(&times, &f1_sq);

    let mut t_samples = t_lattice(horizon);
    t_samples.extend_from_slice(&times);
    let bd = &spec.boundary;
    let mut g0_sup = 0.0f64;
    let mut g1_sup = 0.0f64;
    for &t in &t_samples {
        g0_sup = g0_sup.max(bd.g0(t).map_err(SolveError::eval("g0", t))?.abs());
        g1_sup = g1_sup.max(bd.g1(t).map_err(SolveError::eval("g1", t))?.abs());
    }
    let dg = |e: &crate::expr::Expr, t: f64| {
        e.numeric_partial(Var::T, &Bindings::new().t(t), None)
            .map_err(SolveError::eval("g'", t))
    };
    let psi0 = times.iter().map(|&t| Ok(1.0 + dg(&bd.g0, t)?.abs())).collect::<Result<Vec<_>, SolveError>>()?;
    let psi1 = times.iter().map(|&t| Ok(1.0 + dg(&bd.g1, t)?.abs())).collect::<Result<Vec<_>, SolveError>>()?;
    let psi0_int = trapezoid(&times, &psi0);
    let psi1_int = trapezoid(&times, &psi1);

    let c0 = l2_sq[0];
    let mu_sup = consts.mu_sup;
    let c_t1 = c0
        + 2.0 * horizon * g.c1_prime
        + f1_l1
        + 4.0 / a0 * horizon * mu_sup * mu_sup * (g0_sup * g0_sup + g1_sup * g1_sup);
    let s_bound: Vec<f64> = f1_cumulative.iter().map(|v| c_t1 * v.exp()).collect();
    let c_s = c_t1 * f1_l1.exp();

    // the generic C_T of the second estimate, taken as the largest of
    // the concrete constants it absorbs
    let mu_c1 = consts.mu_sup + consts.mu_x_sup + consts.mu_t_sup;
    let k_g0 = mu_c1 * ((2.0 + horizon) * g0_sup + horizon);
    let k_g1 = mu_c1 * ((2.0 + horizon) * g1_sup + horizon);
    let t2 = horizon * horizon;
    let candidates = [
        2.0 * t2 * spec.f.m0()
            + 4.0 * horizon * g.c2 * (horizon * c_s.sqrt() + c_s / (2.0 * g.p * g.c1)),
        2.0 * horizon * consts.a_t * c_s / a0,
        t2 * consts.a_t_tilde * c_s / a0,
        t2 * f1_l2_sq,
        2.0 * t2 * mu_sup * mu_sup * g0_sup * g0_sup,
        2.0 * t2 * mu_sup * mu_sup * g1_sup * g1_sup,
        2.0 * k_g0 * k_g0 * psi0_int,
        2.0 * k_g1 * k_g1 * psi1_int,
    ];
    let c_t = candidates.iter().copied().fold(0.0f64, f64::max);
    let factor = 1.0 + 2.0 / a0;
    let cbar_t1 = factor * (6.0 + 8.0 / a0) * c_t;
    let cbar2: Vec<f64> = psi0.iter().zip(&psi1).map(|(a, b)| factor * (a + b)).collect();
    let cbar2_cum = cumulative_trapezoid(&times, &cbar2);
    let x_bound: Vec<f64> = cbar2_cum.iter().map(|v| cbar_t1 * v.exp()).collect();

    // X(t) = t²‖u‖²_{H¹} + ∫ ‖s u'(s)‖²
    let mut du_sq = Vec::with_capacity(nt);
    for i in 0..nt {
        let (a, b) = if nt == 1 {
            (0, 0)
        } else if i == 0 {
            (0, 1)
        } else if i == nt - 1 {
            (nt - 2, nt - 1)
        } else {
            (i - 1, i + 1)
        };
        let v = if a == b {
            0.0
        } else {
            let dt = times[b] - times[a];
            let d: Vec<f64> = traj.states[b]
                .values()
                .iter()
                .zip(traj.states[a].values())
                .map(|(p, q)| (p - q) / dt)
                .collect();
            times[i] * times[i] * quad_form(&mass, &d)
        };
        du_sq.push(v);
    }
    let du_int = cumulative_trapezoid(&times, &du_sq);
    let x: Vec<f64> = (0..nt).map(|i| times[i] * times[i] * h1_sq[i] + du_int[i]).collect();

    let s_holds = s.iter().zip(&s_bound).all(|(v, b)| *v <= b + S_SLACK);
    let x_holds = x.iter().zip(&x_bound).all(|(v, b)| *v <= b * (1.0 + X_SLACK));
    Ok(EnergyTrace {
        times,
        s,
        s_h1_integral,
        s_lp_integral,
        x,
        s_bound,
        x_bound,
        c_t1,
        c_t2_integral: f1_l1,
        c_t,
        cbar_t1,
        cbar_t2_integral: *cbar2_cum.last().expect("non-empty"),
        psi0,
        psi1,
        a0,
        s_holds,
        x_holds,
        x_slack: X_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mass_matrix_small() {
        let m = assemble_mass(&FemBasis::new(2).unwrap());
        assert_abs_diff_eq!(m.diag()[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.diag()[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.sup()[0], 1.0 / 12.0, epsilon = 1e-15);
        assert!(m.is_symmetric());
    }

    #[test]
    fn unit_stiffness_rows() {
        let b = FemBasis::new(4).unwrap();
        let k = stiffness_with(&b, 2.0, 0.0, |_| Ok(1.0)).unwrap();
        assert_abs_diff_eq!(k.diag()[2], 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.sup()[1], -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.diag()[0], 4.0 + 2.0, epsilon = 1e-12);
    }
}
