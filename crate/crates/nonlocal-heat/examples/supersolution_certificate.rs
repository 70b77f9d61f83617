//! Discrete certificate for the supersolution inequalities.
//!
//! Builds the exponential supersolution for a sub-linear instance and
//! evaluates the three defining inequalities (interior, boundary, initial)
//! on the grid at 20 sample times, printing the worst oriented residual of
//! each. All of them must stay above −1e-6·(1 + sup ū).

use nonlocal_heat::grid::Grid;
use nonlocal_heat::integrate::SolverConfig;
use nonlocal_heat::problem::{DomainSpec, InitialSpec, KernelSpec, ProblemSpec};
use nonlocal_heat::theory::{build_supersolution, check_supersub, CandidateKind};

fn main() {
    let problem = ProblemSpec {
        a: 1.0,
        b: 1.0,
        p: 0.4,
        q: 0.4,
        m: 1.0,
        l: 0.8,
        domain: DomainSpec::Interval { length: 1.0 },
        kernel: KernelSpec::Constant { kappa: 1.0 },
        initial: InitialSpec::Bump {
            amplitude: 0.5,
            center: [0.5, 0.0],
            width: 0.3,
            baseline: 0.2,
        },
        forcing: None,
        extensions: false,
    };
    let config = SolverConfig { n: 41, t_end: 5.0, ..SolverConfig::default() };
    let grid = Grid::new(&problem.domain, config.n).expect("grid");

    let bar = build_supersolution(&problem, &grid, config.t_end).expect("sub-linear branch");
    println!("constants (raw bound → inflated):");
    println!("  c: {:.6} → {:.6}", bar.params.c_bound, bar.params.c);
    println!("  C: {:.6} → {:.6}", bar.params.big_c_bound, bar.params.big_c);
    println!("  μ: {:.6} → {:.6}", bar.params.mu_bound, bar.params.mu);

    let times: Vec<f64> = (0..20).map(|i| config.t_end * i as f64 / 19.0).collect();
    let report = check_supersub(&bar, &problem, &grid, &times, CandidateKind::Super).expect("check");

    println!("\nworst oriented residuals over {} sample times:", times.len());
    println!("  interior: {:+.6e}", report.interior_worst);
    println!("  boundary: {:+.6e}", report.boundary_worst);
    println!("  initial:  {:+.6e}", report.initial_worst);
    println!("  scaled margin: {:+.6e} (worst at t = {:.3})", report.scaled_margin, report.worst_time);
    println!("\ncertificate: {}", if report.pass { "PASS" } else { "FAIL" });
}
