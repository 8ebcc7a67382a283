//! Solvers and verification tools for the one-dimensional semilinear heat
//! equation
//!
//! ```text
//! u_t - (mu(x,t) u_x)_x + f(u) = f1(x,t)   on (0,1) x (0,T)
//! u_x(0,t) = h0 u(0,t) + g0(t),  -u_x(1,t) = h1 u(1,t) + g1(t)
//! ```
//!
//! with a finite-difference method-of-lines solver ([`fdm`]), a P1
//! Galerkin solver ([`galerkin`]), the steady limit problem
//! ([`stationary`]) and post-processing audits ([`analysis`]).

pub mod analysis;
pub mod expr;
pub mod fdm;
pub mod forms;
pub mod galerkin;
pub mod grid;
pub mod linalg;
pub mod newton;
pub mod problem;
pub mod quadrature;
pub mod sampling;
pub mod stationary;
pub mod stepping;
