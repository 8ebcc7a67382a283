mod common;

use common::{exact, manufactured, parse, power_nonlinearity, zero_problem, XT};
use nalgebra::DMatrix;
use proptest::prelude::*;
use robin_heat::analysis::sample_exact;
use robin_heat::expr::Expr;
use robin_heat::forms::form_constants;
use robin_heat::galerkin::{
    self, assemble_load, assemble_mass, assemble_stiffness, energy_traces, step_imex, FemBasis,
    GalerkinSolver, GalerkinState,
};
use robin_heat::grid::GridFunction;
use robin_heat::linalg::TriDiag;
use robin_heat::problem::{BoundaryData, CoefficientField, GrowthBounds, ProblemSpec, ScalarNonlinearity};
use robin_heat::stepping::{initial_state, StepperConfig, StepperKind};

fn dense(a: &TriDiag) -> DMatrix<f64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

fn quad(a: &TriDiag, v: &[f64]) -> f64 {
    a.mul_vec(v).unwrap().iter().zip(v).map(|(x, y)| x * y).sum()
}

fn cfg(dt: f64) -> StepperConfig {
    StepperConfig::new(dt, StepperKind::BackwardEuler).unwrap()
}

fn with_boundary(spec: &ProblemSpec, g0: f64, g1: f64) -> ProblemSpec {
    let mut s = spec.clone();
    s.boundary = BoundaryData::new(spec.boundary.h0, spec.boundary.h1, Expr::constant(g0), Expr::constant(g1))
        .unwrap();
    s
}

/// `f = 0`, `f1 = 1`, homogeneous Robin data.
fn unit_forcing() -> ProblemSpec {
    let g = GrowthBounds {
        c1: 1.0,
        c1_prime: 0.0,
        c2: 1.0,
        p: 2.0,
        delta: 1e-6,
    };
    let f = ScalarNonlinearity::new(Expr::constant(0.0), g).unwrap();
    let mu = CoefficientField::new(Expr::constant(1.0), None, 1.0).unwrap();
    let boundary = BoundaryData::new(1.0, 1.0, Expr::constant(0.0), Expr::constant(0.0)).unwrap();
    ProblemSpec::new(mu, f, Expr::constant(1.0), boundary, Expr::constant(0.0), 1.0).unwrap()
}

#[test]
fn mass_matrix_entries() {
    let m = assemble_mass(&FemBasis::new(2).unwrap());
    assert!((m.diag()[0] - 1.0 / 6.0).abs() < 1e-15);
    assert!((m.diag()[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!((m.diag()[2] - 1.0 / 6.0).abs() < 1e-15);
    assert!((m.sup()[0] - 1.0 / 12.0).abs() < 1e-15);
    assert!(m.is_symmetric());

    let basis = FemBasis::new(10).unwrap();
    let m = assemble_mass(&basis);
    let sums = m.mul_vec(&vec![1.0; 11]).unwrap();
    let h = basis.h();
    assert!((sums[0] - h / 2.0).abs() < 1e-15);
    assert!((sums[10] - h / 2.0).abs() < 1e-15);
    assert!(sums[1..10].iter().all(|s| (s - h).abs() < 1e-15));
    assert!(dense(&m).cholesky().is_some());
}

#[test]
fn stiffness_matrix_entries() {
    let spec = manufactured(3.0);
    let basis = FemBasis::new(8).unwrap();
    let k = assemble_stiffness(0.0, &spec, &basis).unwrap();
    let h = basis.h();
    assert!((k.diag()[0] - (1.0 / h + 2.0)).abs() < 1e-12);
    assert!((k.diag()[8] - (1.0 / h + 1.0)).abs() < 1e-12);
    for j in 1..8 {
        assert!((k.diag()[j] - 2.0 / h).abs() < 1e-12);
        assert!((k.sub()[j - 1] + 1.0 / h).abs() < 1e-12);
    }
    assert!(k.is_symmetric());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stiffness_is_coercive(m in 2usize..40, seed in prop::collection::vec(-5.0f64..5.0, 41)) {
        let spec = manufactured(3.0);
        let a0 = form_constants(&spec).unwrap().a0;
        let basis = FemBasis::new(m).unwrap();
        let v = &seed[..=m];
        let k = assemble_stiffness(0.0, &spec, &basis).unwrap();
        let mass = assemble_mass(&basis);
        // unit coefficient and no boundary terms: exact ‖v_x‖²
        let mut plain = assemble_stiffness(0.0, &spec, &basis).unwrap().diag().to_vec();
        plain[0] -= spec.boundary.h0;
        plain[m] -= spec.boundary.h1;
        let unit = TriDiag::new(k.sub().to_vec(), plain, k.sup().to_vec()).unwrap();
        let h1 = quad(&mass, v) + quad(&unit, v);
        prop_assert!(quad(&k, v) >= a0 * h1 - 1e-6);
    }
}

#[test]
fn load_of_unit_forcing() {
    let spec = unit_forcing();
    let basis = FemBasis::new(10).unwrap();
    let lag = GalerkinState {
        coefficients: GridFunction::from_fn(10, |x| 3.0 * x).unwrap(),
        t: 0.0,
    };
    let load = assemble_load(0.0, &spec, &basis, &lag).unwrap();
    let h = basis.h();
    assert!((load[0] - h / 2.0).abs() < 1e-15);
    assert!((load[10] - h / 2.0).abs() < 1e-15);
    assert!(load[1..10].iter().all(|l| (l - h).abs() < 1e-15));
}

#[test]
fn boundary_forcing_enters_end_entries_only() {
    let spec = manufactured(3.0);
    let basis = FemBasis::new(10).unwrap();
    let lag = GalerkinState {
        coefficients: initial_state(&spec, 10).unwrap(),
        t: 0.0,
    };
    let full = assemble_load(0.0, &spec, &basis, &lag).unwrap();
    let bare = assemble_load(0.0, &with_boundary(&spec, 0.0, 0.0), &basis, &lag).unwrap();
    assert!((full[0] - bare[0] - 2.0).abs() < 1e-12);
    assert!((full[10] - bare[10] - 4.0 * std::f64::consts::E).abs() < 1e-12);
    assert_eq!(&full[1..10], &bare[1..10]);
}

#[test]
fn zero_problem_stays_zero() {
    let traj = galerkin::solve(&zero_problem(1.0), 8, &cfg(0.1)).unwrap();
    assert!(traj.states.iter().all(|s| s.values().iter().all(|&v| v == 0.0)));
    let e = energy_traces(&traj, &zero_problem(1.0)).unwrap();
    assert!(e.s.iter().all(|&s| s == 0.0));
    assert!(e.s_holds && e.x_holds);
}

#[test]
fn state_independent_term_needs_one_inner_iteration() {
    let spec = unit_forcing();
    let basis = FemBasis::new(6).unwrap();
    let state = GalerkinState {
        coefficients: GridFunction::zeros(6),
        t: 0.0,
    };
    let (next, out) = step_imex(&state, &spec, &basis, &cfg(0.1)).unwrap();
    assert_eq!(out.inner_iterations, 1);
    assert!((next.t - 0.1).abs() < 1e-15);
}

#[test]
fn manufactured_run_at_unit_time() {
    let spec = manufactured(1.0);
    let traj = galerkin::solve(&spec, 40, &cfg(1.0 / 100.0)).unwrap();
    let at = traj.index_near(1.0);
    let truth = sample_exact(&exact(), 40, traj.times[at]).unwrap();
    let err = traj.states[at].max_abs_difference(&truth).unwrap();
    assert!(err < 2e-2, "{err}");
}

#[test]
fn stiffness_cached_for_constant_coefficient() {
    let spec = manufactured(0.5);
    let mut solver = GalerkinSolver::new(&spec, FemBasis::new(10).unwrap(), cfg(0.05)).unwrap();
    solver.solve().unwrap();
    assert_eq!(solver.stiffness_assemblies(), 1);

    let mut varying = spec.clone();
    varying.mu = CoefficientField::new(parse("1 + 0.1*t*x", XT), None, 0.5).unwrap();
    let mut solver = GalerkinSolver::new(&varying, FemBasis::new(10).unwrap(), cfg(0.05)).unwrap();
    solver.solve().unwrap();
    assert_eq!(solver.stiffness_assemblies(), 10);
}

#[test]
fn energy_estimates_hold_on_manufactured_run() {
    let spec = manufactured(3.0);
    let traj = galerkin::solve(&spec, 20, &cfg(1.0 / 50.0)).unwrap();
    let e = energy_traces(&traj, &spec).unwrap();
    assert!(e.s.iter().all(|s| s.is_finite() && *s >= 0.0));
    assert!(e.x.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert!(e.s_holds, "S exceeds its bound");
    assert!(e.x_holds, "X exceeds its bound");
    assert!(e.s_h1_integral.windows(2).all(|w| w[1] >= w[0]));
    assert!(e.s_lp_integral.windows(2).all(|w| w[1] >= w[0]));
    assert!(e.c_t1.is_finite() && e.cbar_t1.is_finite() && e.c_t.is_finite());
}

#[test]
fn energy_estimates_hold_on_bound_problem() {
    let spec = common::bound_demo(2.0);
    let traj = galerkin::solve(&spec, 16, &cfg(1.0 / 40.0)).unwrap();
    let e = energy_traces(&traj, &spec).unwrap();
    assert!(e.s_holds && e.x_holds);
}

#[test]
fn nonlinearity_is_lagged_to_convergence() {
    let spec = manufactured(0.2);
    let traj = galerkin::solve(&spec, 10, &cfg(0.02)).unwrap();
    assert!(traj.inner_iterations.iter().all(|&k| k > 1 && k <= 50));
    assert_eq!(power_nonlinearity().eval(4.0).unwrap(), 8.0);
}
