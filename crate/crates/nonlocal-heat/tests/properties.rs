//! Cross-module invariants as property tests: quadrature linearity and
//! monotonicity, the exact discrete divergence identity behind the mass
//! balance, config round-trips, and solver determinism under the comparison
//! ordering.

use nonlocal_heat::grid::{
    boundary_quadrature, laplacian_with_flux, volume_quadrature, Field, Grid,
};
use nonlocal_heat::integrate::{solve, SolverConfig};
use nonlocal_heat::problem::{
    parse_config, to_config_string, DomainSpec, InitialSpec, KernelSpec, ProblemSpec,
};
use proptest::prelude::*;

fn interval_grid(n: usize) -> Grid {
    Grid::new(&DomainSpec::Interval { length: 1.0 }, n).unwrap()
}

fn square_grid(n: usize) -> Grid {
    Grid::new(&DomainSpec::Rectangle { lx: 1.0, ly: 1.0 }, n).unwrap()
}

proptest! {
    #[test]
    fn volume_quadrature_is_linear_and_monotone(
        f in proptest::collection::vec(-5.0_f64..5.0, 17),
        g in proptest::collection::vec(0.0_f64..3.0, 17),
        alpha in -2.0_f64..2.0,
    ) {
        let grid = interval_grid(17);
        let ff = Field::from(f.clone());
        let gf = Field::from(g.clone());
        let combo = Field::from(
            f.iter().zip(&g).map(|(a, b)| alpha * a + b).collect::<Vec<_>>(),
        );
        let lhs = volume_quadrature(&combo, &grid);
        let rhs = alpha * volume_quadrature(&ff, &grid) + volume_quadrature(&gf, &grid);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));

        // monotone: adding a nonnegative field never decreases the integral
        let above = Field::from(f.iter().zip(&g).map(|(a, b)| a + b).collect::<Vec<_>>());
        prop_assert!(volume_quadrature(&above, &grid) + 1e-12 >= volume_quadrature(&ff, &grid));
    }

    // Σ w·Δ_h u = Σ bw·flux for any field and any flux: the discrete
    // divergence theorem that makes the mass diagnostic meaningful.
    #[test]
    fn divergence_identity_interval(
        f in proptest::collection::vec(-3.0_f64..3.0, 19),
        flux in proptest::collection::vec(-2.0_f64..2.0, 2),
    ) {
        let grid = interval_grid(19);
        let field = Field::from(f);
        let lap = laplacian_with_flux(&field, &flux, &grid);
        let lhs = volume_quadrature(&lap, &grid);
        let rhs = boundary_quadrature(&flux, &grid);
        prop_assert!((lhs - rhs).abs() <= 1e-9, "lhs {lhs} vs rhs {rhs}");
    }

    #[test]
    fn divergence_identity_square(
        f in proptest::collection::vec(-3.0_f64..3.0, 49),
        flux in proptest::collection::vec(-2.0_f64..2.0, 24),
    ) {
        let grid = square_grid(7);
        prop_assert_eq!(grid.boundary().len(), 24);
        let field = Field::from(f);
        let lap = laplacian_with_flux(&field, &flux, &grid);
        let lhs = volume_quadrature(&lap, &grid);
        let rhs = boundary_quadrature(&flux, &grid);
        prop_assert!((lhs - rhs).abs() <= 1e-8, "lhs {lhs} vs rhs {rhs}");
    }

    #[test]
    fn config_round_trip_random_specs(
        a in 0.1_f64..3.0,
        b in 0.1_f64..3.0,
        p in 0.1_f64..2.5,
        q in 0.1_f64..2.5,
        m in 0.1_f64..3.0,
        l in 0.1_f64..3.0,
        kappa in 0.0_f64..2.0,
        amp in 0.0_f64..4.0,
        n in 3_usize..40,
        t_end in 0.01_f64..10.0,
    ) {
        let problem = ProblemSpec {
            a, b, p, q, m, l,
            domain: DomainSpec::Interval { length: 1.0 },
            kernel: KernelSpec::Constant { kappa },
            initial: InitialSpec::Bump {
                amplitude: amp,
                center: [0.4, 0.0],
                width: 0.2,
                baseline: 0.05,
            },
            forcing: None,
            extensions: false,
        };
        let solver = SolverConfig { n, t_end, ..SolverConfig::default() };
        let text = to_config_string(&problem, &solver).unwrap();
        let (problem2, solver2) = parse_config(&text).unwrap();
        prop_assert_eq!(problem, problem2);
        prop_assert_eq!(solver, solver2);
    }
}

/// Ordered initial data give ordered runs: a handful of constructed pairs
/// (PDE runs are too slow for shotgun case generation).
#[test]
fn comparison_ordering_for_constructed_pairs() {
    let base = |kernel: KernelSpec, initial: InitialSpec| ProblemSpec {
        a: 1.0,
        b: 1.0,
        p: 1.0,
        q: 1.0,
        m: 1.0,
        l: 1.0,
        domain: DomainSpec::Interval { length: 1.0 },
        kernel,
        initial,
        forcing: None,
        extensions: false,
    };
    let pairs = [
        (
            base(KernelSpec::Zero, InitialSpec::Constant { value: 0.5 }),
            base(KernelSpec::Zero, InitialSpec::Constant { value: 0.8 }),
        ),
        (
            base(
                KernelSpec::Constant { kappa: 0.3 },
                InitialSpec::Bump {
                    amplitude: 0.4,
                    center: [0.3, 0.0],
                    width: 0.2,
                    baseline: 0.1,
                },
            ),
            base(
                KernelSpec::Constant { kappa: 0.3 },
                InitialSpec::Bump {
                    amplitude: 0.4,
                    center: [0.3, 0.0],
                    width: 0.2,
                    baseline: 0.25,
                },
            ),
        ),
    ];
    let config = SolverConfig {
        n: 31,
        t_end: 0.4,
        record_dt: Some(0.05),
        store_snapshots: true,
        ..SolverConfig::default()
    };
    for (low, high) in pairs {
        let run_low = solve(&low, &config).unwrap();
        let run_high = solve(&high, &config).unwrap();
        assert_eq!(run_low.snapshots.len(), run_high.snapshots.len());
        for ((_, ul), (_, uh)) in run_low.snapshots.iter().zip(&run_high.snapshots) {
            let tol = 1e-8 * (1.0 + uh.sup());
            for i in 0..ul.len() {
                assert!(
                    ul[i] <= uh[i] + tol,
                    "ordering violated: {} > {} + {tol}",
                    ul[i],
                    uh[i]
                );
            }
        }
    }
}

/// Two-dimensional pure diffusion with no-flux closure conserves mass.
#[test]
fn rectangle_diffusion_conserves_mass() {
    let problem = ProblemSpec {
        a: 0.0,
        b: 0.0,
        p: 1.0,
        q: 1.0,
        m: 1.0,
        l: 1.0,
        domain: DomainSpec::Rectangle { lx: 1.0, ly: 0.5 },
        kernel: KernelSpec::Zero,
        initial: InitialSpec::Bump {
            amplitude: 1.0,
            center: [0.5, 0.25],
            width: 0.2,
            baseline: 0.05,
        },
        forcing: None,
        extensions: true,
    };
    let config = SolverConfig { n: 17, t_end: 0.25, ..SolverConfig::default() };
    let result = solve(&problem, &config).unwrap();
    let v0 = result.records.first().unwrap().mass;
    for r in &result.records {
        assert!(
            (r.mass - v0).abs() <= 1e-10 * v0.abs(),
            "mass drifted: {} vs {v0}",
            r.mass
        );
    }
}
