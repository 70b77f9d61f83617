//! Numerical laboratory for the nonlocal semilinear heat equation
//!
//! ```text
//! u_t = Δu + a·u^p ∫_Ω u^q(y,t) dy − b·u^m          in Ω × (0,T),
//! ∂u/∂ν = ∫_Ω k(x,y,t)·u^l(y,t) dy                  on ∂Ω × (0,T),
//! u(x,0) = u0(x) ≥ 0                                 in Ω,
//! ```
//!
//! on intervals and rectangles. The crate couples a method-of-lines
//! finite-difference solver with adaptive explicit time stepping and
//! finite-time blow-up detection to a set of executable theory checks:
//!
//! - regime classification (global existence for all data vs. blow-up for
//!   large data) from the exponents `(p, q, l, m)`,
//! - the scalar ODE subsolution `f' = a|Ω|·f^{p+q} − b·f^m` and its exact
//!   blow-up time by quadrature,
//! - an explicit exponential supersolution built from the first Dirichlet
//!   eigenpair, with a discrete certificate checker for the supersolution /
//!   subsolution inequalities,
//! - mass thresholds on `V(0) = ∫ u0` that guarantee finite-time blow-up
//!   driven by the boundary term,
//! - the ε-regularized auxiliary problem whose decreasing solution family
//!   approximates the maximal solution.
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `nlheat` binary for the command-line front end.

pub mod cli;
pub mod grid;
pub mod integrate;
pub mod problem;
pub mod regularize;
pub mod rhs;
pub mod theory;

pub use grid::{Field, Grid};
pub use integrate::{solve, RunResult, RunStatus, SolverConfig};
pub use problem::{
    parse_config, DomainSpec, ForcingSpec, InitialSpec, KernelSpec, ProblemSpec,
};
pub use theory::{classify_regime, ode_blowup_time, RegimeLabel};
