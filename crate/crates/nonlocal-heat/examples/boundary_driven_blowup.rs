//! Blow-up driven by the boundary term alone, with the mass thresholds that
//! guarantee it.
//!
//! Here p+q = 0.5 keeps the interior reaction sub-linear, but l = 3 > m = 1
//! makes the kernel-weighted boundary influx supercritical. Once
//! V(0) = ∫ u0 clears the thresholds built from k0 = min k̲(t), every
//! solution must blow up before the horizon.

use nonlocal_heat::grid::Grid;
use nonlocal_heat::integrate::{solve, RunStatus, SolverConfig};
use nonlocal_heat::problem::{DomainSpec, InitialSpec, KernelSpec, ProblemSpec};
use nonlocal_heat::theory::mass_thresholds;

fn main() {
    let problem = ProblemSpec {
        a: 1.0,
        b: 1.0,
        p: 0.25,
        q: 0.25,
        m: 1.0,
        l: 3.0,
        domain: DomainSpec::Interval { length: 1.0 },
        kernel: KernelSpec::Constant { kappa: 0.5 },
        initial: InitialSpec::Constant { value: 2.0 },
        forcing: None,
        extensions: false,
    };
    let config = SolverConfig { n: 41, t_end: 2.0, ..SolverConfig::default() };

    let grid = Grid::new(&problem.domain, config.n).expect("grid");
    let report = mass_thresholds(&problem, &grid, config.t_end).expect("l-branch instance");
    println!("kernel lower bound k0 = {:.4} on [0, {:.2}]", report.k0, report.t0);
    for b in &report.bounds {
        println!("  threshold `{}`: V(0) ≥ {:.6}", b.name, b.value);
    }
    println!(
        "achieved V(0) = {:.4}, required {:.4} → thresholds met: {}",
        report.achieved_v0, report.required_v0, report.met
    );
    assert!(report.met, "pick larger data or a stronger kernel");

    let result = solve(&problem, &config).expect("run");
    println!("\nstatus: {:?} at t = {:.4} (horizon {:.1})", result.status, result.t_reached, config.t_end);
    assert_eq!(result.status, RunStatus::BlowUp);
    assert!(result.t_reached <= report.t0);
    println!("blow-up before the threshold horizon, as promised");

    // the boundary nodes lead the interior into the singularity
    let f = &result.final_field;
    let edge = f[0].max(f[f.len() - 1]);
    println!("final sup = {:.3e}, at the boundary = {:.3e}", f.sup(), edge);
}
