//! Semi-discrete right-hand side: diffusion closed with the nonlocal flux,
//! the nonlocal volume reaction, absorption, and the optional forcing hook.
//!
//! Kernel samples at (boundary node, volume node) pairs are the cost hotspot
//! and are precomputed once; separable kernels factor the time profile out
//! exactly, tabulated kernels interpolate between their two bracketing
//! slices per evaluation.
//!
//! Powers `u^e` for fractional exponents clip negative transients to zero
//! before powering (explicit stages can undershoot near steep gradients) and
//! clamp the argument at 1e-300 so the log stays finite; exact zeros power
//! to exact zero.

use thiserror::Error;

use crate::grid::{
    boundary_quadrature, laplacian_with_flux, one_sided_normal_derivative, volume_quadrature,
    Field, Grid,
};
use crate::problem::{AffineTime, KernelSpec, ProblemSpec};

/// Relative slack for the positivity integrity check: nodal values below
/// `−1e-9·(1 + sup|u|)` mean something upstream broke positivity.
const NEG_INTEGRITY_REL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RhsError {
    #[error("positivity breach upstream: min nodal value {min} below -{tol}")]
    Integrity { min: f64, tol: f64 },
    #[error("kernel evaluation failed: t = {t} outside tabulated range [{lo}, {hi}]")]
    KernelOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("non-finite nodal value passed to the right-hand side")]
    NonFinite,
    #[error("{0}")]
    Config(String),
}

/// `x^e` with negative transients clipped to zero and a 1e-300 floor under
/// the fractional-power path.
pub fn clipped_pow(x: f64, e: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else {
        x.max(1e-300).powf(e)
    }
}

#[derive(Debug, Clone)]
enum KernelCache {
    Zero,
    Constant(f64),
    /// Spatial matrix g(x_b)·h(y_j) flattened row-major per boundary slot,
    /// scaled by τ(t) at evaluation time.
    Separable {
        spatial: Vec<f64>,
        tau: AffineTime,
        spatial_max: f64,
    },
    Tabulated {
        times: Vec<f64>,
        /// One flattened (n_boundary × n_volume) matrix per time.
        slices: Vec<Vec<f64>>,
        slice_max: Vec<f64>,
    },
}

/// Everything `rhs_eval` needs besides the state: the problem, the grid, and
/// the kernel samples. Read-only after construction; concurrent evaluation
/// on different fields is safe.
#[derive(Debug, Clone)]
pub struct RhsContext {
    problem: ProblemSpec,
    grid: Grid,
    cache: KernelCache,
}

impl RhsContext {
    pub fn new(problem: ProblemSpec, grid: Grid) -> Result<Self, RhsError> {
        problem.validate().map_err(|e| RhsError::Config(e.to_string()))?;
        let nb = grid.boundary().len();
        let nv = grid.num_nodes();
        let cache = match &problem.kernel {
            KernelSpec::Zero => KernelCache::Zero,
            KernelSpec::Constant { kappa } => KernelCache::Constant(*kappa),
            KernelSpec::Separable { g, h, tau } => {
                let mut spatial = Vec::with_capacity(nb * nv);
                for bn in grid.boundary() {
                    let gb = g.eval(grid.coord(bn.node));
                    for node in 0..nv {
                        spatial.push(gb * h.eval(grid.coord(node)));
                    }
                }
                let spatial_max = spatial.iter().copied().fold(0.0, f64::max);
                KernelCache::Separable { spatial, tau: *tau, spatial_max }
            }
            KernelSpec::Tabulated { times, values } => {
                let mut slices = Vec::with_capacity(times.len());
                for slice in values {
                    if slice.len() != nb {
                        return Err(RhsError::Config(format!(
                            "tabulated kernel has {} boundary rows but the grid has {} boundary nodes",
                            slice.len(),
                            nb
                        )));
                    }
                    let mut flat = Vec::with_capacity(nb * nv);
                    for row in slice {
                        if row.len() != nv {
                            return Err(RhsError::Config(format!(
                                "tabulated kernel has {} volume columns but the grid has {} nodes",
                                row.len(),
                                nv
                            )));
                        }
                        flat.extend_from_slice(row);
                    }
                    slices.push(flat);
                }
                let slice_max = slices
                    .iter()
                    .map(|s| s.iter().copied().fold(0.0, f64::max))
                    .collect();
                KernelCache::Tabulated { times: times.clone(), slices, slice_max }
            }
        };
        Ok(RhsContext { problem, grid, cache })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// One kernel sample `k(x_b, y_j, t)`.
    pub fn kernel_at(&self, slot: usize, node: usize, t: f64) -> Result<f64, RhsError> {
        let nv = self.grid.num_nodes();
        match &self.cache {
            KernelCache::Zero => Ok(0.0),
            KernelCache::Constant(kappa) => Ok(*kappa),
            KernelCache::Separable { spatial, tau, .. } => {
                Ok(spatial[slot * nv + node] * tau.eval(t))
            }
            KernelCache::Tabulated { times, slices, .. } => {
                let (i0, i1, theta) = bracket(times, t)?;
                let k0 = slices[i0][slot * nv + node];
                let k1 = slices[i1][slot * nv + node];
                Ok((1.0 - theta) * k0 + theta * k1)
            }
        }
    }

    /// Upper bound on the kernel over the current samples, used by the
    /// reaction time-step heuristic.
    pub fn kernel_sup(&self, t: f64) -> f64 {
        match &self.cache {
            KernelCache::Zero => 0.0,
            KernelCache::Constant(kappa) => *kappa,
            KernelCache::Separable { tau, spatial_max, .. } => spatial_max * tau.eval(t).max(0.0),
            KernelCache::Tabulated { times, slice_max, .. } => match bracket(times, t) {
                Ok((i0, i1, _)) => slice_max[i0].max(slice_max[i1]),
                Err(_) => slice_max.iter().copied().fold(0.0, f64::max),
            },
        }
    }

    /// Last time the tabulated kernel covers, if tabulated.
    pub fn tabulated_horizon(&self) -> Option<f64> {
        match &self.cache {
            KernelCache::Tabulated { times, .. } => times.last().copied(),
            _ => None,
        }
    }
}

fn bracket(times: &[f64], t: f64) -> Result<(usize, usize, f64), RhsError> {
    let lo = times[0];
    let hi = *times.last().unwrap();
    if t < lo || t > hi {
        return Err(RhsError::KernelOutOfRange { t, lo, hi });
    }
    // piecewise-linear in t
    let i1 = times.partition_point(|&s| s < t).min(times.len() - 1).max(1);
    let i0 = i1 - 1;
    let span = times[i1] - times[i0];
    Ok(((i0), (i1), (t - times[i0]) / span))
}

fn check_input(u: &Field) -> Result<(), RhsError> {
    let mut min = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    for &v in u.values() {
        if !v.is_finite() {
            return Err(RhsError::NonFinite);
        }
        min = min.min(v);
        max_abs = max_abs.max(v.abs());
    }
    let tol = NEG_INTEGRITY_REL * (1.0 + max_abs);
    if min < -tol {
        return Err(RhsError::Integrity { min, tol });
    }
    Ok(())
}

/// `S = ∫_Ω u^q dy` by trapezoidal quadrature; the nodewise reaction is then
/// `a·u^p·S − b·u^m`.
pub fn nonlocal_volume_factor(u: &Field, grid: &Grid, q: f64) -> Result<f64, RhsError> {
    check_input(u)?;
    Ok(u.values()
        .iter()
        .zip(grid.volume_weights())
        .map(|(&v, w)| clipped_pow(v, q) * w)
        .sum())
}

/// Boundary flux values `∫_Ω k(x_b, y, t)·u^l(y) dy`, one per boundary node.
pub fn boundary_flux(t: f64, u: &Field, ctx: &RhsContext) -> Result<Vec<f64>, RhsError> {
    check_input(u)?;
    let grid = &ctx.grid;
    let nb = grid.boundary().len();
    let nv = grid.num_nodes();
    let l = ctx.problem.l;
    match &ctx.cache {
        KernelCache::Zero => Ok(vec![0.0; nb]),
        KernelCache::Constant(kappa) => {
            let integral: f64 = u
                .values()
                .iter()
                .zip(grid.volume_weights())
                .map(|(&v, w)| clipped_pow(v, l) * w)
                .sum();
            Ok(vec![kappa * integral; nb])
        }
        KernelCache::Separable { spatial, tau, .. } => {
            let tau_t = tau.eval(t);
            let powered: Vec<f64> = u
                .values()
                .iter()
                .zip(grid.volume_weights())
                .map(|(&v, w)| clipped_pow(v, l) * w)
                .collect();
            Ok((0..nb)
                .map(|slot| {
                    let row = &spatial[slot * nv..(slot + 1) * nv];
                    tau_t * row.iter().zip(&powered).map(|(k, p)| k * p).sum::<f64>()
                })
                .collect())
        }
        KernelCache::Tabulated { times, slices, .. } => {
            let (i0, i1, theta) = bracket(times, t)?;
            let powered: Vec<f64> = u
                .values()
                .iter()
                .zip(grid.volume_weights())
                .map(|(&v, w)| clipped_pow(v, l) * w)
                .collect();
            Ok((0..nb)
                .map(|slot| {
                    let r0 = &slices[i0][slot * nv..(slot + 1) * nv];
                    let r1 = &slices[i1][slot * nv..(slot + 1) * nv];
                    r0.iter()
                        .zip(r1)
                        .zip(&powered)
                        .map(|((k0, k1), p)| ((1.0 - theta) * k0 + theta * k1) * p)
                        .sum()
                })
                .collect())
        }
    }
}

/// Full semi-discrete right-hand side `du/dt` at every node. Deterministic:
/// identical inputs give bit-identical outputs.
pub fn rhs_eval(t: f64, u: &Field, ctx: &RhsContext) -> Result<Field, RhsError> {
    check_input(u)?;
    let problem = &ctx.problem;
    let grid = &ctx.grid;

    let flux = boundary_flux(t, u, ctx)?;
    let mut out = laplacian_with_flux(u, &flux, grid);

    let s = if problem.a > 0.0 {
        nonlocal_volume_factor(u, grid, problem.q)?
    } else {
        0.0
    };

    let (a, b, p, m) = (problem.a, problem.b, problem.p, problem.m);
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let ui = u[i];
        if a > 0.0 {
            *v += a * clipped_pow(ui, p) * s;
        }
        if b > 0.0 {
            *v -= b * clipped_pow(ui, m);
        }
    }
    if let Some(forcing) = &problem.forcing {
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v += forcing.eval(grid.coord(i), t);
        }
    }
    Ok(out)
}

/// Integral diagnostics of the mass identity at one instant:
/// `dV/dt = ∮ flux + a·∫u^p·∫u^q − b·∫u^m + ∫forcing`.
pub fn mass_rate(t: f64, u: &Field, ctx: &RhsContext) -> Result<f64, RhsError> {
    let problem = &ctx.problem;
    let grid = &ctx.grid;
    let flux = boundary_flux(t, u, ctx)?;
    let mut rate = boundary_quadrature(&flux, grid);
    if problem.a > 0.0 {
        let ip = nonlocal_volume_factor(u, grid, problem.p)?;
        let iq = nonlocal_volume_factor(u, grid, problem.q)?;
        rate += problem.a * ip * iq;
    }
    if problem.b > 0.0 {
        rate -= problem.b * nonlocal_volume_factor(u, grid, problem.m)?;
    }
    if let Some(forcing) = &problem.forcing {
        let f = grid.field_from_fn(|c| forcing.eval(c, t));
        rate += volume_quadrature(&f, grid);
    }
    Ok(rate)
}

/// Max over boundary nodes of |one-sided ∂u0/∂ν − ∫ k(x,·,0)·u0^l dy|.
pub(crate) fn compatibility_residual_impl(ctx: &RhsContext, u0: &Field) -> Result<f64, RhsError> {
    let flux = boundary_flux(0.0, u0, ctx)?;
    let mut worst = 0.0_f64;
    for slot in 0..ctx.grid.boundary().len() {
        let lhs = one_sided_normal_derivative(u0, &ctx.grid, slot);
        worst = worst.max((lhs - flux[slot]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineProfile, DomainSpec, InitialSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn base_problem(kernel: KernelSpec) -> ProblemSpec {
        ProblemSpec {
            a: 1.0,
            b: 1.0,
            p: 1.0,
            q: 1.0,
            m: 1.0,
            l: 1.0,
            domain: DomainSpec::Interval { length: 1.0 },
            kernel,
            initial: InitialSpec::Constant { value: 1.0 },
            forcing: None,
            extensions: false,
        }
    }

    fn ctx_with(kernel: KernelSpec, n: usize) -> RhsContext {
        let problem = base_problem(kernel);
        let grid = Grid::new(&problem.domain, n).unwrap();
        RhsContext::new(problem, grid).unwrap()
    }

    #[test]
    fn volume_factor_constants() {
        let grid = Grid::new(&DomainSpec::Interval { length: 1.0 }, 31).unwrap();
        let one = Field::constant(1.0, grid.num_nodes());
        assert_abs_diff_eq!(nonlocal_volume_factor(&one, &grid, 3.7).unwrap(), 1.0, epsilon = 1e-13);

        let c = Field::constant(2.5, grid.num_nodes());
        assert_abs_diff_eq!(
            nonlocal_volume_factor(&c, &grid, 1.7).unwrap(),
            2.5_f64.powf(1.7),
            epsilon = 1e-12
        );
    }

    #[test]
    fn volume_factor_sine_squared() {
        let grid = Grid::new(&DomainSpec::Interval { length: 1.0 }, 51).unwrap();
        let f = grid.field_from_fn(|c| (std::f64::consts::PI * c[0]).sin());
        let s = nonlocal_volume_factor(&f, &grid, 2.0).unwrap();
        assert!((s - 0.5).abs() < 1e-3, "s = {s}");
    }

    #[test]
    fn volume_factor_integrity_error() {
        let grid = Grid::new(&DomainSpec::Interval { length: 1.0 }, 11).unwrap();
        let mut f = Field::constant(1.0, grid.num_nodes());
        f.values_mut()[4] = -0.5;
        assert!(matches!(
            nonlocal_volume_factor(&f, &grid, 2.0),
            Err(RhsError::Integrity { .. })
        ));
        // tiny transients are tolerated and clipped
        let mut f = Field::constant(1.0, grid.num_nodes());
        f.values_mut()[4] = -1e-12;
        assert!(nonlocal_volume_factor(&f, &grid, 2.0).is_ok());
    }

    #[test]
    fn boundary_flux_zero_and_constant() {
        let ctx = ctx_with(KernelSpec::Zero, 21);
        let u = Field::constant(3.0, ctx.grid().num_nodes());
        assert!(boundary_flux(0.0, &u, &ctx).unwrap().iter().all(|&f| f == 0.0));

        let mut problem = base_problem(KernelSpec::Constant { kappa: 0.7 });
        problem.l = 1.5;
        let grid = Grid::new(&problem.domain, 21).unwrap();
        let ctx = RhsContext::new(problem, grid).unwrap();
        let u = Field::constant(3.0, ctx.grid().num_nodes());
        for f in boundary_flux(2.0, &u, &ctx).unwrap() {
            assert_abs_diff_eq!(f, 0.7 * 3.0_f64.powf(1.5), epsilon = 1e-12);
        }
    }

    #[test]
    fn separable_flux_matches_double_loop() {
        let kernel = KernelSpec::Separable {
            g: AffineProfile { c0: 1.0, cx: 0.5, cy: 0.0 },
            h: AffineProfile { c0: 0.25, cx: 0.75, cy: 0.0 },
            tau: AffineTime { c0: 1.0, ct: 0.25 },
        };
        let mut problem = base_problem(kernel);
        problem.l = 1.3;
        let grid = Grid::new(&problem.domain, 33).unwrap();
        let ctx = RhsContext::new(problem, grid).unwrap();
        let u = ctx.grid().field_from_fn(|c| 0.5 + c[0] * c[0]);
        let t = 0.8;

        let fast = boundary_flux(t, &u, &ctx).unwrap();
        for (slot, &f) in fast.iter().enumerate() {
            let mut direct = 0.0;
            for node in 0..ctx.grid().num_nodes() {
                let k = ctx.kernel_at(slot, node, t).unwrap();
                direct += k * clipped_pow(u[node], 1.3) * ctx.grid().volume_weights()[node];
            }
            assert_abs_diff_eq!(f, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn tabulated_kernel_interpolates_and_errors_out_of_range() {
        let grid = Grid::new(&DomainSpec::Interval { length: 1.0 }, 3).unwrap();
        let nb = grid.boundary().len();
        let nv = grid.num_nodes();
        let kernel = KernelSpec::Tabulated {
            times: vec![0.0, 2.0],
            values: vec![
                vec![vec![0.0; nv]; nb],
                vec![vec![2.0; nv]; nb],
            ],
        };
        let ctx = RhsContext::new(base_problem(kernel), grid).unwrap();
        assert_abs_diff_eq!(ctx.kernel_at(0, 1, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ctx.kernel_at(0, 1, 0.0).unwrap(), 0.0, epsilon = 1e-14);
        let u = Field::constant(1.0, ctx.grid().num_nodes());
        assert!(matches!(
            boundary_flux(3.0, &u, &ctx),
            Err(RhsError::KernelOutOfRange { .. })
        ));
    }

    #[test]
    fn rhs_equilibrium_constant_is_zero() {
        // u ≡ 1 with a = b = 1, |Ω| = 1, zero kernel: a·1·1 − b·1 = 0.
        let mut problem = base_problem(KernelSpec::Zero);
        problem.p = 1.3;
        problem.q = 0.4;
        problem.m = 2.2;
        let grid = Grid::new(&problem.domain, 41).unwrap();
        let ctx = RhsContext::new(problem, grid).unwrap();
        let u = Field::constant(1.0, ctx.grid().num_nodes());
        let rhs = rhs_eval(0.0, &u, &ctx).unwrap();
        for &v in rhs.values() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rhs_constant_field_matches_scalar_ode() {
        let mut problem = base_problem(KernelSpec::Zero);
        problem.a = 0.8;
        problem.b = 1.4;
        problem.p = 1.2;
        problem.q = 0.7;
        problem.m = 1.9;
        let grid = Grid::new(&problem.domain, 41).unwrap();
        let ctx = RhsContext::new(problem.clone(), grid).unwrap();
        let c = 1.7_f64;
        let u = Field::constant(c, ctx.grid().num_nodes());
        let rhs = rhs_eval(0.5, &u, &ctx).unwrap();
        let expected = problem.a * c.powf(problem.p + problem.q) - problem.b * c.powf(problem.m);
        for &v in rhs.values() {
            assert_abs_diff_eq!(v, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn rhs_time_translation_equivariant_for_time_independent_kernel() {
        let ctx = ctx_with(KernelSpec::Constant { kappa: 0.5 }, 21);
        let u = ctx.grid().field_from_fn(|c| 1.0 + c[0]);
        let r1 = rhs_eval(0.0, &u, &ctx).unwrap();
        let r2 = rhs_eval(17.3, &u, &ctx).unwrap();
        assert_eq!(r1.values(), r2.values());
    }

    #[test]
    fn pure_diffusion_conserves_mass() {
        let mut problem = base_problem(KernelSpec::Zero);
        problem.a = 0.0;
        problem.b = 0.0;
        problem.extensions = true;
        let grid = Grid::new(&problem.domain, 31).unwrap();
        let ctx = RhsContext::new(problem, grid).unwrap();
        let u = ctx.grid().field_from_fn(|c| 1.0 + (3.0 * c[0]).sin().abs());
        let rhs = rhs_eval(0.0, &u, &ctx).unwrap();
        let total = volume_quadrature(&rhs, ctx.grid());
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn manufactured_solution_rhs_converges_at_second_order() {
        // u*(x,t) = e^{-t}(1 + cos πx) has zero normal derivative, so with a
        // zero kernel and the matching forcing the right-hand side must
        // reproduce u*_t = −u* to O(h²).
        let pi = std::f64::consts::PI;
        let t = 0.25_f64;
        let mut errs = Vec::new();
        for n in [21, 41] {
            let mut problem = base_problem(KernelSpec::Zero);
            problem.forcing = Some(crate::problem::ForcingSpec::Custom(std::sync::Arc::new(
                move |x: [f64; 2], t: f64| {
                    let u = (-t).exp() * (1.0 + (pi * x[0]).cos());
                    let lap = -pi * pi * (-t).exp() * (pi * x[0]).cos();
                    let integral = (-t).exp(); // ∫ u* dy on [0,1]
                    -u - lap - u * integral + u
                },
            )));
            let grid = Grid::new(&problem.domain, n).unwrap();
            let ctx = RhsContext::new(problem, grid).unwrap();
            let u = ctx.grid().field_from_fn(|c| (-t).exp() * (1.0 + (pi * c[0]).cos()));
            let rhs = rhs_eval(t, &u, &ctx).unwrap();
            let mut worst = 0.0_f64;
            for (i, &v) in rhs.values().iter().enumerate() {
                let exact = -(-t).exp() * (1.0 + (pi * ctx.grid().coord(i)[0]).cos());
                worst = worst.max((v - exact).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "observed order {order:.2} (errors {errs:?})");
    }

    #[test]
    fn compatibility_residual_examples() {
        // Zero kernel, constant data: both sides vanish.
        let problem = base_problem(KernelSpec::Zero);
        let grid = Grid::new(&problem.domain, 21).unwrap();
        let r = crate::problem::compatibility_residual(&problem, &grid).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-14);

        // Constant kernel κ = 1, constant data 1 on [0,1]: |0 − 1| = 1.
        let problem = base_problem(KernelSpec::Constant { kappa: 1.0 });
        let grid = Grid::new(&problem.domain, 21).unwrap();
        let r = crate::problem::compatibility_residual(&problem, &grid).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn compatibility_residual_tuned_initial_data() {
        // u0(x) = c0 + c1·cosh(α(x − 1/2)) has boundary slope matched to the
        // kernel integral by solving the scalar condition for c1 with
        // bisection; the one-sided difference then agrees to O(h).
        let alpha = 2.0_f64;
        let c0 = 0.3_f64;
        let kappa = 0.5_f64;
        let l = 2.0_f64;

        let slope = |c1: f64| c1 * alpha * (alpha * 0.5).sinh();
        let integral = |c1: f64| {
            // high-accuracy quadrature of (c0 + c1 cosh(α(x−1/2)))^l
            let n = 20_000;
            let h = 1.0 / n as f64;
            let f = |x: f64| (c0 + c1 * (alpha * (x - 0.5)).cosh()).powf(l);
            let mut s = 0.5 * (f(0.0) + f(1.0));
            for i in 1..n {
                s += f(i as f64 * h);
            }
            s * h
        };
        let g = |c1: f64| slope(c1) - kappa * integral(c1);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c1 = 0.5 * (lo + hi);

        let mut residuals = Vec::new();
        for n in [41, 81] {
            let mut problem = base_problem(KernelSpec::Constant { kappa });
            problem.l = l;
            let grid = Grid::new(&problem.domain, n).unwrap();
            let values: Vec<f64> = grid
                .coords()
                .iter()
                .map(|c| c0 + c1 * (alpha * (c[0] - 0.5)).cosh())
                .collect();
            problem.initial = InitialSpec::Tabulated { values };
            residuals.push(crate::problem::compatibility_residual(&problem, &grid).unwrap());
        }
        // O(h): halving h roughly halves the residual, and it is already small.
        assert!(residuals[0] < 0.05, "residuals {residuals:?}");
        assert!(residuals[1] < 0.6 * residuals[0], "residuals {residuals:?}");
    }

    proptest! {
        // Kernel ≥ 0 and weights ≥ 0 make the nonlocal operators monotone.
        #[test]
        fn nonlocal_operators_are_monotone(
            seed in proptest::collection::vec(0.0_f64..3.0, 21),
            bumps in proptest::collection::vec(0.0_f64..1.5, 21),
            q in 0.3_f64..2.5,
        ) {
            let mut problem = base_problem(KernelSpec::Constant { kappa: 0.8 });
            problem.l = 1.4;
            let grid = Grid::new(&problem.domain, 21).unwrap();
            let ctx = RhsContext::new(problem, grid).unwrap();
            let u = Field::from(seed.clone());
            let v = Field::from(seed.iter().zip(&bumps).map(|(a, b)| a + b).collect::<Vec<_>>());

            let su = nonlocal_volume_factor(&u, ctx.grid(), q).unwrap();
            let sv = nonlocal_volume_factor(&v, ctx.grid(), q).unwrap();
            prop_assert!(su <= sv + 1e-12);

            let fu = boundary_flux(0.0, &u, &ctx).unwrap();
            let fv = boundary_flux(0.0, &v, &ctx).unwrap();
            for (a, b) in fu.iter().zip(&fv) {
                prop_assert!(*a <= b + 1e-12);
            }
        }
    }
}
