//! Executable forms of the analytical results: regime classification from
//! the exponents, the scalar ODE subsolution and its blow-up time by
//! quadrature, the explicit exponential supersolution for the sub-linear
//! regime, a discrete checker for the supersolution / subsolution
//! inequalities, and the mass thresholds that force boundary-driven blow-up.
//!
//! Conventions carried through this module:
//!
//! - Eigenpairs are closed-form product sines (never computed numerically):
//!   `φ = sin(πx/L)` with `λ₁ = (π/L)²` on an interval, and the tensor
//!   product with `λ₁ = π²(Lx⁻² + Ly⁻²)` on a rectangle. `sup φ = 1`.
//! - Construction constants are evaluated on the grid and inflated by 5%:
//!   grid extrema under-estimate continuum suprema.
//! - On rectangles the eigenfunction gradient vanishes at corners, so corner
//!   nodes are excluded from the boundary-slope minimum; with a nonzero
//!   kernel the boundary inequality genuinely degenerates near corners and
//!   the checker reports it rather than certifying it.

use serde::Serialize;
use thiserror::Error;

use crate::grid::{
    laplacian_interior, volume_quadrature, Field, Grid, GridError,
};
use crate::problem::{ConfigError, DomainSpec, ProblemSpec};
use crate::rhs::{boundary_flux, clipped_pow, RhsContext, RhsError};

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("supersolution construction needs max(p+q, l) ≤ 1; got p+q = {pq}, l = {l}")]
    BranchPrecondition { pq: f64, l: f64 },
    #[error("blow-up time integral needs ρ > max(m, 1); got ρ = {rho}, m = {m}")]
    ExponentPrecondition { rho: f64, m: f64 },
    #[error("mass thresholds need l > max(m, 1); got l = {l}, m = {m}")]
    MassBranchPrecondition { l: f64, m: f64 },
    #[error(
        "boundary-integrated kernel lower bound must be positive at t = 0 (got {kbar0}); \
         the blow-up threshold analysis assumes it"
    )]
    KernelLowerBound { kbar0: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

// ── regime classification ───────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeLabel {
    /// Every solution is global regardless of the data.
    GlobalAllData,
    /// Solutions with large enough data blow up in finite time.
    BlowUpLargeData,
    /// Neither result applies; explored empirically only.
    TheoryGap,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeLabel::GlobalAllData => write!(f, "GlobalAllData"),
            RegimeLabel::BlowUpLargeData => write!(f, "BlowUpLargeData"),
            RegimeLabel::TheoryGap => write!(f, "TheoryGap"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeClassification {
    pub label: RegimeLabel,
    /// Conditions that fired, as human-readable strings.
    pub citations: Vec<String>,
}

/// Classify the exponent tuple. `kbar0_positive` states whether
/// `inf_y ∫_∂Ω k(x, y, 0) dS_x > 0`, which the `l`-driven blow-up branch
/// needs; the `p+q` branch does not use the kernel at all.
pub fn classify_regime(
    p: f64,
    q: f64,
    l: f64,
    m: f64,
    kbar0_positive: bool,
) -> RegimeClassification {
    let growth = (p + q).max(l);
    let mut citations = Vec::new();

    if growth <= 1.0 {
        citations.push(format!("max(p+q, l) = {growth} <= 1"));
        return RegimeClassification { label: RegimeLabel::GlobalAllData, citations };
    }
    if growth < m {
        citations.push(format!("1 < max(p+q, l) = {growth} < m = {m}"));
        return RegimeClassification { label: RegimeLabel::GlobalAllData, citations };
    }

    let threshold = m.max(1.0);
    if p + q > threshold {
        citations.push(format!("p+q = {} > max(m, 1) = {threshold}", p + q));
    }
    if l > threshold && kbar0_positive {
        citations.push(format!(
            "l = {l} > max(m, 1) = {threshold} with positive boundary kernel mass"
        ));
    }
    if !citations.is_empty() {
        return RegimeClassification { label: RegimeLabel::BlowUpLargeData, citations };
    }

    RegimeClassification {
        label: RegimeLabel::TheoryGap,
        citations: vec!["no global-existence or blow-up condition applies".into()],
    }
}

// ── the scalar ODE subsolution ──────────────────────────────────────

/// The comparison ODE `f' = a|Ω|·f^ρ − b·f^m` started at `f0`.
#[derive(Debug, Clone, Serialize)]
pub struct OdeComparison {
    pub f0: f64,
    /// `f* = (b/(a|Ω|))^{1/(ρ−m)}`; growth needs `f0 > f*`.
    pub equilibrium: f64,
    pub blowup_time: Option<f64>,
}

/// Blow-up time `t0 = ∫_{f0}^∞ df / (a|Ω|·f^ρ − b·f^m)` of the comparison
/// ODE, or `None` when `f0` does not exceed the equilibrium. Quadrature runs
/// on the substitution `f = f0/(1−s)`, `s ∈ [0, 1)`, with a double-
/// exponential rule to absolute tolerance 1e-9 (the integrand has an
/// algebraic endpoint singularity when ρ < 2).
pub fn ode_blowup_time(
    a: f64,
    volume: f64,
    b: f64,
    rho: f64,
    m: f64,
    f0: f64,
) -> Result<Option<f64>, TheoryError> {
    if !(rho > m.max(1.0)) {
        return Err(TheoryError::ExponentPrecondition { rho, m });
    }
    let alpha = a * volume;
    if alpha <= 0.0 || f0 <= 0.0 {
        return Ok(None);
    }
    let f_star = if b == 0.0 { 0.0 } else { (b / alpha).powf(1.0 / (rho - m)) };
    if f0 <= f_star {
        return Ok(None);
    }

    // denominator factored as f^m·(α·f^{ρ−m} − b) so overflow saturates to
    // +∞ instead of producing ∞ − ∞
    let integrand = |s: f64| -> f64 {
        let one_minus = 1.0 - s;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let f = f0 / one_minus;
        let denom = f.powf(m) * (alpha * f.powf(rho - m) - b) * one_minus * one_minus;
        if denom.is_finite() && denom > 0.0 {
            f0 / denom
        } else {
            0.0
        }
    };
    let t0 = tanh_sinh_unit_interval(integrand, 1e-9)
        .map_err(TheoryError::Quadrature)?;
    Ok(Some(t0))
}

/// Convenience wrapper packaging the equilibrium together with the time.
pub fn ode_comparison(
    a: f64,
    volume: f64,
    b: f64,
    rho: f64,
    m: f64,
    f0: f64,
) -> Result<OdeComparison, TheoryError> {
    let alpha = a * volume;
    let equilibrium = if b == 0.0 || alpha <= 0.0 {
        0.0
    } else {
        (b / alpha).powf(1.0 / (rho - m))
    };
    Ok(OdeComparison {
        f0,
        equilibrium,
        blowup_time: ode_blowup_time(a, volume, b, rho, m, f0)?,
    })
}

/// Double-exponential (tanh-sinh) quadrature of `g` over `(0, 1)`, tolerant
/// of algebraic endpoint singularities. Absolute tolerance `tol`.
fn tanh_sinh_unit_interval(g: impl Fn(f64) -> f64, tol: f64) -> Result<f64, String> {
    let u_max = 6.0;
    let eval = |u: f64| -> f64 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let sh = half_pi * u.sinh();
        let ch = sh.cosh();
        // x = (1 + tanh(sh))/2, dx/du = (π/4)·cosh(u)/cosh²(sh)
        let x = 0.5 * (1.0 + sh.tanh());
        let w = 0.5 * half_pi * u.cosh() / (ch * ch);
        if !w.is_finite() || w < 1e-320 {
            return 0.0;
        }
        let v = g(x);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };

    let mut h = 1.0_f64;
    let mut total = eval(0.0);
    let mut k = 1;
    loop {
        let u = k as f64 * h;
        if u > u_max {
            break;
        }
        total += eval(u) + eval(-u);
        k += 1;
    }
    let mut prev = total * h;

    for _level in 0..12 {
        h *= 0.5;
        // add the odd multiples of the new spacing
        let mut extra = 0.0;
        let mut k = 1;
        loop {
            let u = k as f64 * h;
            if u > u_max {
                break;
            }
            extra += eval(u) + eval(-u);
            k += 2;
        }
        total += extra;
        let current = total * h;
        if (current - prev).abs() < tol {
            return Ok(current);
        }
        prev = current;
    }
    Err(format!("tolerance {tol} not reached; last estimate {prev}"))
}

/// Closed-form solution of `f' = α·f² − β·f`, `f(0) = f0` — the ρ = 2,
/// m = 1 comparison ODE. Valid until its blow-up time when `f0 > β/α`.
pub fn logistic_growth_solution(alpha: f64, beta: f64, f0: f64) -> impl Fn(f64) -> f64 + Clone {
    move |t: f64| {
        let y = if beta == 0.0 {
            1.0 / f0 - alpha * t
        } else {
            let ye = alpha / beta;
            ye + (1.0 / f0 - ye) * (beta * t).exp()
        };
        1.0 / y
    }
}

// ── the explicit supersolution ──────────────────────────────────────

/// Closed-form first Dirichlet eigenpair of −Δ, normalized to `sup φ = 1`.
#[derive(Debug, Clone, Copy)]
pub struct DirichletEigenpair {
    domain: DomainSpec,
}

impl DirichletEigenpair {
    pub fn new(domain: DomainSpec) -> Self {
        DirichletEigenpair { domain }
    }

    pub fn lambda1(&self) -> f64 {
        let pi = std::f64::consts::PI;
        match self.domain {
            DomainSpec::Interval { length } => (pi / length).powi(2),
            DomainSpec::Rectangle { lx, ly } => pi * pi * (1.0 / (lx * lx) + 1.0 / (ly * ly)),
        }
    }

    pub fn phi(&self, x: [f64; 2]) -> f64 {
        let pi = std::f64::consts::PI;
        match self.domain {
            DomainSpec::Interval { length } => (pi * x[0] / length).sin(),
            DomainSpec::Rectangle { lx, ly } => (pi * x[0] / lx).sin() * (pi * x[1] / ly).sin(),
        }
    }

    pub fn grad_phi(&self, x: [f64; 2]) -> [f64; 2] {
        let pi = std::f64::consts::PI;
        match self.domain {
            DomainSpec::Interval { length } => {
                [(pi / length) * (pi * x[0] / length).cos(), 0.0]
            }
            DomainSpec::Rectangle { lx, ly } => [
                (pi / lx) * (pi * x[0] / lx).cos() * (pi * x[1] / ly).sin(),
                (pi / ly) * (pi * x[0] / lx).sin() * (pi * x[1] / ly).cos(),
            ],
        }
    }
}

/// Construction constants of the supersolution `ū = C·e^{μt}/(c·φ + 1)`,
/// with the raw grid-evaluated bounds echoed next to the inflated values.
#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionParams {
    pub lambda1: f64,
    /// Kernel upper bound K over the construction horizon.
    pub kernel_bound: f64,
    pub c: f64,
    pub big_c: f64,
    pub mu: f64,
    /// Uninflated bound on c: `K·∫(φ+1)^{−l}·min_∂Ω(−∂φ/∂ν)^{−1}`.
    pub c_bound: f64,
    /// Uninflated bound on C: `sup (cφ+1)·u0`.
    pub big_c_bound: f64,
    /// Uninflated bound on μ: `λ₁ + 2c²·sup|∇φ|²/(cφ+1)² + a|Ω|`.
    pub mu_bound: f64,
}

/// The supersolution candidate itself.
#[derive(Debug, Clone)]
pub struct Supersolution {
    pub params: SupersolutionParams,
    eigen: DirichletEigenpair,
}

impl Supersolution {
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        self.params.big_c * (self.params.mu * t).exp() / (self.params.c * self.eigen.phi(x) + 1.0)
    }

    pub fn field_at(&self, grid: &Grid, t: f64) -> Field {
        grid.field_from_fn(|x| self.eval(x, t))
    }
}

/// Build the explicit supersolution for the sub-linear regime
/// `max(p+q, l) ≤ 1`. Constants come from grid quadrature and extrema with a
/// 5% safety inflation (grid extrema under-estimate continuum suprema).
pub fn build_supersolution(
    problem: &ProblemSpec,
    grid: &Grid,
    t_end: f64,
) -> Result<Supersolution, TheoryError> {
    let pq = problem.p + problem.q;
    if pq.max(problem.l) > 1.0 {
        return Err(TheoryError::BranchPrecondition { pq, l: problem.l });
    }
    let eigen = DirichletEigenpair::new(problem.domain);
    let lambda1 = eigen.lambda1();

    let ctx = RhsContext::new(problem.clone(), grid.clone())?;
    let mut kernel_bound = 0.0_f64;
    for i in 0..=32 {
        let t = t_end * i as f64 / 32.0;
        kernel_bound = kernel_bound.max(ctx.kernel_sup(t));
    }

    // c ≥ K·∫_Ω (φ+1)^{−l} dy · min_∂Ω(−∂φ/∂ν)^{−1}; corner nodes carry a
    // vanishing eigenfunction slope and are excluded from the minimum.
    let phi_decay = grid.field_from_fn(|x| (eigen.phi(x) + 1.0).powf(-problem.l));
    let q_l = volume_quadrature(&phi_decay, grid);
    let mut slope_min = f64::INFINITY;
    for bn in grid.boundary() {
        if bn.faces.len() > 1 {
            continue;
        }
        let g = eigen.grad_phi(grid.coord(bn.node));
        let dnu = g[0] * bn.normal[0] + g[1] * bn.normal[1];
        slope_min = slope_min.min(-dnu);
    }
    let c_bound = if kernel_bound == 0.0 { 0.0 } else { kernel_bound * q_l / slope_min };
    let c = (1.05 * c_bound).max(1.0);

    let u0 = problem.initial.realize(grid)?;
    let mut big_c_bound = 0.0_f64;
    let mut grad_ratio = 0.0_f64;
    for (node, &x) in grid.coords().iter().enumerate() {
        let phi = eigen.phi(x);
        big_c_bound = big_c_bound.max((c * phi + 1.0) * u0[node]);
        let g = eigen.grad_phi(x);
        let g2 = g[0] * g[0] + g[1] * g[1];
        grad_ratio = grad_ratio.max(g2 / (c * phi + 1.0).powi(2));
    }
    let big_c = (1.05 * big_c_bound).max(1.0);

    let mu_bound = lambda1 + 2.0 * c * c * grad_ratio + problem.a * grid.volume();
    let mu = 1.05 * mu_bound;

    Ok(Supersolution {
        params: SupersolutionParams {
            lambda1,
            kernel_bound,
            c,
            big_c,
            mu,
            c_bound,
            big_c_bound,
            mu_bound,
        },
        eigen,
    })
}

// ── the discrete super/subsolution checker ──────────────────────────

/// Anything evaluable at arbitrary points and times; closures qualify.
pub trait CandidateField {
    fn eval(&self, x: [f64; 2], t: f64) -> f64;
}

impl<F: Fn([f64; 2], f64) -> f64> CandidateField for F {
    fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        self(x, t)
    }
}

impl CandidateField for Supersolution {
    fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        Supersolution::eval(self, x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateKind {
    Super,
    Sub,
}

/// Worst oriented residuals of the three defining inequalities. Residuals
/// are oriented so that nonnegative means "inequality satisfied": a
/// supersolution needs `u_t − Δu − a·u^p∫u^q + b·u^m ≥ 0`,
/// `∂u/∂ν − ∫k·u^l ≥ 0`, `u(·,0) − u0 ≥ 0`, and a subsolution the reverse.
/// PASS tolerates `−1e-6·(1 + sup_x |u(·,t)|)` at each sample time.
#[derive(Debug, Clone, Serialize)]
pub struct SuperSubReport {
    pub kind: CandidateKind,
    pub pass: bool,
    /// Global minima of the oriented residuals.
    pub interior_worst: f64,
    pub boundary_worst: f64,
    pub initial_worst: f64,
    /// Minimum over samples of (residual + tolerance); negative fails.
    pub scaled_margin: f64,
    pub worst_time: f64,
    pub sup_candidate: f64,
    pub sample_times: Vec<f64>,
}

/// Evaluate the three discrete inequalities of the supersolution /
/// subsolution definition for `candidate` at the given sample times.
///
/// The time derivative comes from centered differencing of the generator
/// with step `1e-6·max(1, t)`; the normal derivative from one-sided
/// second-order differencing along the outward normal; the Laplacian and all
/// integrals from the grid operators. The candidate is checked against the
/// unforced model — any forcing hook on `problem` is ignored here.
pub fn check_supersub(
    candidate: &dyn CandidateField,
    problem: &ProblemSpec,
    grid: &Grid,
    sample_times: &[f64],
    kind: CandidateKind,
) -> Result<SuperSubReport, TheoryError> {
    let ctx = RhsContext::new(problem.clone(), grid.clone())?;
    let orient = match kind {
        CandidateKind::Super => 1.0,
        CandidateKind::Sub => -1.0,
    };

    let mut interior_worst = f64::INFINITY;
    let mut boundary_worst = f64::INFINITY;
    let mut scaled_margin = f64::INFINITY;
    let mut worst_time = 0.0;
    let mut sup_candidate = 0.0_f64;

    let delta_sp = 1e-6 * grid.diameter().max(1.0);

    for &t in sample_times {
        let u_now = grid.field_from_fn(|x| candidate.eval(x, t));
        let sup_t = u_now.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        sup_candidate = sup_candidate.max(sup_t);
        let tol = 1e-6 * (1.0 + sup_t);

        let dt = 1e-6 * t.abs().max(1.0);
        let u_plus = grid.field_from_fn(|x| candidate.eval(x, t + dt));
        let u_minus = grid.field_from_fn(|x| candidate.eval(x, t - dt));

        let lap = laplacian_interior(&u_now, grid);
        let s_q = volume_quadrature(
            &Field::from(
                u_now
                    .values()
                    .iter()
                    .map(|&v| clipped_pow(v, problem.q))
                    .collect::<Vec<_>>(),
            ),
            grid,
        );

        let mut time_min = f64::INFINITY;
        for &node in grid.interior() {
            let u_t = (u_plus[node] - u_minus[node]) / (2.0 * dt);
            let r = u_t - lap[node] - problem.a * clipped_pow(u_now[node], problem.p) * s_q
                + problem.b * clipped_pow(u_now[node], problem.m);
            let oriented = orient * r;
            interior_worst = interior_worst.min(oriented);
            time_min = time_min.min(oriented);
        }

        let flux_rhs = boundary_flux(t, &u_now, &ctx)?;
        for (slot, bn) in grid.boundary().iter().enumerate() {
            let xb = grid.coord(bn.node);
            let inward = [-bn.normal[0], -bn.normal[1]];
            let u0 = candidate.eval(xb, t);
            let u1 = candidate.eval(
                [xb[0] + delta_sp * inward[0], xb[1] + delta_sp * inward[1]],
                t,
            );
            let u2 = candidate.eval(
                [
                    xb[0] + 2.0 * delta_sp * inward[0],
                    xb[1] + 2.0 * delta_sp * inward[1],
                ],
                t,
            );
            let dnu = (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * delta_sp);
            let oriented = orient * (dnu - flux_rhs[slot]);
            boundary_worst = boundary_worst.min(oriented);
            time_min = time_min.min(oriented);
        }

        if time_min + tol < scaled_margin {
            scaled_margin = time_min + tol;
            worst_time = t;
        }
    }

    // initial inequality, once
    let u_at_zero = grid.field_from_fn(|x| candidate.eval(x, 0.0));
    let u0 = problem.initial.realize(grid)?;
    let mut initial_worst = f64::INFINITY;
    for node in 0..grid.num_nodes() {
        let oriented = orient * (u_at_zero[node] - u0[node]);
        initial_worst = initial_worst.min(oriented);
    }
    let sup0 = u_at_zero.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol0 = 1e-6 * (1.0 + sup0);
    if initial_worst + tol0 < scaled_margin {
        scaled_margin = initial_worst + tol0;
        worst_time = 0.0;
    }

    Ok(SuperSubReport {
        kind,
        pass: scaled_margin >= 0.0,
        interior_worst,
        boundary_worst,
        initial_worst,
        scaled_margin,
        worst_time,
        sup_candidate,
        sample_times: sample_times.to_vec(),
    })
}

// ── mass thresholds for boundary-driven blow-up ─────────────────────

/// `k̲(t) = inf_y ∫_∂Ω k(x, y, t) dS_x` on the grid: boundary quadrature in
/// the surface variable, minimum over volume nodes.
pub fn kernel_lower_bound(ctx: &RhsContext, t: f64) -> Result<f64, TheoryError> {
    let grid = ctx.grid();
    let nb = grid.boundary().len();
    let mut min = f64::INFINITY;
    for node in 0..grid.num_nodes() {
        let mut integral = 0.0;
        for slot in 0..nb {
            integral += grid.boundary()[slot].weight * ctx.kernel_at(slot, node, t)?;
        }
        min = min.min(integral);
    }
    Ok(min)
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedBound {
    pub name: String,
    pub value: f64,
}

/// Large-data thresholds on `V(0) = ∫ u0`: when they are met, the mass
/// inequality forces blow-up no later than the horizon `t0`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    /// Which case produced the bounds (`m > 1` or `m ≤ 1`).
    pub case_m_above_one: bool,
    /// `k0 = min over [0, T0] of k̲(t)`.
    pub k0: f64,
    /// Effective horizon with `k̲ > 0`; the requested horizon, truncated if
    /// the kernel lower bound loses positivity earlier.
    pub t0: f64,
    pub bounds: Vec<NamedBound>,
    pub required_v0: f64,
    pub achieved_v0: f64,
    pub met: bool,
}

/// Evaluate the blow-up mass thresholds for an `l > max(m, 1)` instance over
/// the horizon `t0`.
pub fn mass_thresholds(
    problem: &ProblemSpec,
    grid: &Grid,
    t0: f64,
) -> Result<ThresholdReport, TheoryError> {
    let (l, m, b) = (problem.l, problem.m, problem.b);
    if !(l > m.max(1.0)) {
        return Err(TheoryError::MassBranchPrecondition { l, m });
    }
    let ctx = RhsContext::new(problem.clone(), grid.clone())?;
    let kbar0 = kernel_lower_bound(&ctx, 0.0)?;
    if kbar0 <= 0.0 {
        return Err(TheoryError::KernelLowerBound { kbar0 });
    }

    // walk k̲ over [0, t0]; stop where positivity fails
    let samples: usize = 128;
    let mut t0_eff = t0;
    let mut k0 = f64::INFINITY;
    for i in 0..=samples {
        let t = t0 * i as f64 / samples as f64;
        let kbar = kernel_lower_bound(&ctx, t)?;
        if kbar <= 0.0 {
            t0_eff = t0 * (i.saturating_sub(1)) as f64 / samples as f64;
            break;
        }
        k0 = k0.min(kbar);
    }

    let volume = grid.volume();
    let u0 = problem.initial.realize(grid)?;
    let achieved_v0 = volume_quadrature(&u0, grid);

    let kernel_strength =
        k0.powf(-1.0 / (l - m)) * (b * volume.powf((l - m) / l) + 1.0).powf(1.0 / (l - m))
            * volume.powf((l - 1.0) / l);

    let mut bounds = Vec::new();
    let (required_v0, met);
    if m > 1.0 {
        let horizon = ((m - 1.0) * volume.powf(-m * (l - 1.0) / l) * t0_eff).powf(-1.0 / (m - 1.0));
        bounds.push(NamedBound { name: "mass_growth_horizon".into(), value: horizon });
        bounds.push(NamedBound { name: "kernel_strength".into(), value: kernel_strength });
        required_v0 = horizon.max(kernel_strength);
        met = achieved_v0 >= horizon && achieved_v0 > kernel_strength;
    } else {
        let floor = kernel_strength.max(1.0);
        bounds.push(NamedBound { name: "kernel_strength_floor".into(), value: floor });
        let window = if b == 0.0 {
            // b → 0 limit of (k0|Ω|^{1−l}/(b|Ω|^{1−m}))·(1 − e^{−b(l−1)|Ω|^{1−m}T0})
            k0 * volume.powf(1.0 - l) * (l - 1.0) * volume.powf(1.0 - m) * t0_eff
        } else {
            let rate = b * (l - 1.0) * volume.powf(1.0 - m);
            k0 * volume.powf(1.0 - l) / (b * volume.powf(1.0 - m)) * (1.0 - (-rate * t0_eff).exp())
        };
        let exponential_window = window.powf(-1.0 / (l - 1.0));
        bounds.push(NamedBound { name: "exponential_window".into(), value: exponential_window });
        required_v0 = floor.max(exponential_window);
        met = achieved_v0 >= required_v0;
    }

    Ok(ThresholdReport {
        case_m_above_one: m > 1.0,
        k0,
        t0: t0_eff,
        bounds,
        required_v0,
        achieved_v0,
        met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{InitialSpec, KernelSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn problem_with(kernel: KernelSpec, exps: (f64, f64, f64, f64)) -> ProblemSpec {
        ProblemSpec {
            a: 1.0,
            b: 1.0,
            p: exps.0,
            q: exps.1,
            l: exps.2,
            m: exps.3,
            domain: DomainSpec::Interval { length: 1.0 },
            kernel,
            initial: InitialSpec::Constant { value: 0.5 },
            forcing: None,
            extensions: false,
        }
    }

    #[test]
    fn classify_regime_examples() {
        assert_eq!(classify_regime(0.3, 0.5, 0.9, 2.0, true).label, RegimeLabel::GlobalAllData);
        assert_eq!(classify_regime(1.0, 1.0, 1.0, 3.0, true).label, RegimeLabel::GlobalAllData);
        assert_eq!(classify_regime(1.5, 0.6, 1.0, 1.0, true).label, RegimeLabel::BlowUpLargeData);
        // l = 1.5 < m = 2 keeps everything global; lowering m below l flips it
        assert_eq!(classify_regime(0.5, 0.5, 1.5, 2.0, true).label, RegimeLabel::GlobalAllData);
        assert_eq!(classify_regime(0.5, 0.5, 1.5, 1.2, true).label, RegimeLabel::BlowUpLargeData);
        // without kernel mass the l-branch cannot fire
        assert_eq!(classify_regime(0.5, 0.5, 1.5, 1.2, false).label, RegimeLabel::TheoryGap);
    }

    #[test]
    fn classify_regime_monotone_in_m_on_the_global_side() {
        // second-branch global labels stay global as m grows
        let base = classify_regime(1.0, 0.5, 1.2, 2.0, true);
        assert_eq!(base.label, RegimeLabel::GlobalAllData);
        for m in [2.5, 3.0, 10.0, 100.0] {
            assert_eq!(classify_regime(1.0, 0.5, 1.2, m, true).label, RegimeLabel::GlobalAllData);
        }
    }

    #[test]
    fn blowup_and_global_labels_never_overlap() {
        // scan a coarse lattice of exponents; the two labels are disjoint by
        // construction, so every cell gets exactly one label
        for &p in &[0.2, 0.7, 1.3, 2.5] {
            for &q in &[0.2, 0.8, 1.6] {
                for &l in &[0.4, 1.0, 2.2] {
                    for &m in &[0.5, 1.0, 1.8, 3.0] {
                        let c = classify_regime(p, q, l, m, true);
                        let growth: f64 = (p + q).max(l);
                        let global = growth <= 1.0 || growth < m;
                        let blowup = p + q > m.max(1.0) || l > m.max(1.0);
                        if global {
                            assert_eq!(c.label, RegimeLabel::GlobalAllData);
                            assert!(!blowup, "conditions overlap at {p},{q},{l},{m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ode_blowup_time_log_two() {
        // a = |Ω| = b = 1, ρ = 2, m = 1, f0 = 2:
        // ∫_2^∞ df/(f² − f) = ln(f0/(f0−1)) = ln 2.
        let t0 = ode_blowup_time(1.0, 1.0, 1.0, 2.0, 1.0, 2.0).unwrap().unwrap();
        assert_abs_diff_eq!(t0, std::f64::consts::LN_2, epsilon = 1e-9);
    }

    #[test]
    fn ode_blowup_time_equilibrium_and_below() {
        // f* = 1 exactly: no blow-up at or below the equilibrium
        assert!(ode_blowup_time(1.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap().is_none());
        assert!(ode_blowup_time(1.0, 1.0, 1.0, 2.0, 1.0, 0.5).unwrap().is_none());
    }

    #[test]
    fn ode_blowup_time_pure_power() {
        // b = 0: t0 = f0^{1−ρ}/(a|Ω|(ρ−1)) = 1 for ρ = 2, f0 = 1.
        let t0 = ode_blowup_time(1.0, 1.0, 0.0, 2.0, 1.0, 1.0).unwrap().unwrap();
        assert_abs_diff_eq!(t0, 1.0, epsilon = 1e-9);
        // and a fractional exponent with an endpoint singularity, ρ = 1.5:
        // t0 = f0^{−1/2}/(1/2) = 2·f0^{−1/2}
        let t0 = ode_blowup_time(1.0, 1.0, 0.0, 1.5, 1.0, 4.0).unwrap().unwrap();
        assert_abs_diff_eq!(t0, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn ode_blowup_time_strictly_decreasing_in_f0_and_a() {
        let mut prev = f64::INFINITY;
        for f0 in [1.5, 2.0, 3.0, 5.0, 10.0] {
            let t0 = ode_blowup_time(1.0, 1.0, 1.0, 2.3, 1.0, f0).unwrap().unwrap();
            assert!(t0 < prev, "t0 not decreasing in f0");
            prev = t0;
        }
        let mut prev = f64::INFINITY;
        for a in [0.5, 1.0, 2.0, 4.0] {
            let t0 = ode_blowup_time(a, 1.0, 1.0, 2.3, 1.0, 3.0).unwrap().unwrap();
            assert!(t0 < prev, "t0 not decreasing in a");
            prev = t0;
        }
    }

    #[test]
    fn ode_blowup_time_needs_supercritical_exponent() {
        assert!(matches!(
            ode_blowup_time(1.0, 1.0, 1.0, 1.0, 1.0, 2.0),
            Err(TheoryError::ExponentPrecondition { .. })
        ));
    }

    #[test]
    fn logistic_solution_matches_ode() {
        let f = logistic_growth_solution(1.0, 1.0, 2.0);
        assert_abs_diff_eq!(f(0.0), 2.0, epsilon = 1e-14);
        // derivative check by differencing
        let t = 0.3;
        let df = (f(t + 1e-6) - f(t - 1e-6)) / 2e-6;
        assert_relative_eq!(df, f(t).powi(2) - f(t), max_relative = 1e-6);
    }

    #[test]
    fn eigenpair_interval() {
        let eigen = DirichletEigenpair::new(DomainSpec::Interval { length: 1.0 });
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(eigen.lambda1(), pi * pi, epsilon = 1e-12);
        assert_abs_diff_eq!(eigen.phi([0.5, 0.0]), 1.0, epsilon = 1e-12);
        // ∂φ/∂ν = ∇φ·ν = −π at both endpoints
        let dnu_left = eigen.grad_phi([0.0, 0.0])[0] * -1.0;
        let dnu_right = eigen.grad_phi([1.0, 0.0])[0] * 1.0;
        assert_abs_diff_eq!(dnu_left, -pi, epsilon = 1e-12);
        assert_abs_diff_eq!(dnu_right, -pi, epsilon = 1e-12);
    }

    #[test]
    fn supersolution_zero_kernel_constants() {
        // K = 0, u0 ≡ 0: c = 1, C = 1, μ inflates the display value by 5%.
        let mut p = problem_with(KernelSpec::Zero, (0.4, 0.4, 0.8, 1.0));
        p.initial = InitialSpec::Constant { value: 0.0 };
        let grid = Grid::new(&p.domain, 101).unwrap();
        let sup = build_supersolution(&p, &grid, 1.0).unwrap();
        assert_eq!(sup.params.c, 1.0);
        assert_eq!(sup.params.big_c, 1.0);
        let pi = std::f64::consts::PI;
        // sup |∇φ|²/(φ+1)² = π² at the boundary, λ1 = π², a|Ω| = 1
        let display = pi * pi + 2.0 * pi * pi + 1.0;
        assert_relative_eq!(sup.params.mu_bound, display, max_relative = 1e-10);
        assert!(sup.params.mu >= display);
        assert!(sup.params.mu <= 1.06 * display);
    }

    #[test]
    fn supersolution_dominates_initial_data() {
        let mut p = problem_with(KernelSpec::Constant { kappa: 1.0 }, (0.4, 0.4, 0.8, 1.0));
        p.initial = InitialSpec::Bump {
            amplitude: 0.7,
            center: [0.4, 0.0],
            width: 0.3,
            baseline: 0.1,
        };
        let grid = Grid::new(&p.domain, 81).unwrap();
        let sup = build_supersolution(&p, &grid, 2.0).unwrap();
        let u0 = p.initial.realize(&grid).unwrap();
        let bar = sup.field_at(&grid, 0.0);
        for i in 0..u0.len() {
            assert!(bar[i] >= u0[i], "ū(x,0) ≥ u0 violated at node {i}");
        }
    }

    #[test]
    fn supersolution_rejects_superlinear_branch() {
        let p = problem_with(KernelSpec::Zero, (1.0, 1.0, 1.0, 1.0));
        let grid = Grid::new(&p.domain, 21).unwrap();
        assert!(matches!(
            build_supersolution(&p, &grid, 1.0),
            Err(TheoryError::BranchPrecondition { .. })
        ));
    }

    #[test]
    fn checker_passes_built_supersolution() {
        let mut p = problem_with(KernelSpec::Constant { kappa: 1.0 }, (0.4, 0.4, 0.8, 1.0));
        p.initial = InitialSpec::Constant { value: 0.5 };
        let grid = Grid::new(&p.domain, 81).unwrap();
        let sup = build_supersolution(&p, &grid, 1.0).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let report = check_supersub(&sup, &p, &grid, &times, CandidateKind::Super).unwrap();
        assert!(report.pass, "report: {report:?}");
    }

    #[test]
    fn checker_constant_ode_subsolution() {
        // For a spatially constant candidate the interior identity is exact
        // and the boundary inequality reads 0 ≤ ∫k·f^l.
        let p = problem_with(KernelSpec::Constant { kappa: 0.5 }, (1.0, 1.0, 1.0, 1.0));
        let f = logistic_growth_solution(1.0, 1.0, 2.0);
        let candidate = move |_x: [f64; 2], t: f64| f(t);
        let grid = Grid::new(&p.domain, 41).unwrap();
        let mut p2 = p.clone();
        p2.initial = InitialSpec::Constant { value: 2.0 };
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.05).collect();
        let report = check_supersub(&candidate, &p2, &grid, &times, CandidateKind::Sub).unwrap();
        assert!(report.pass, "report: {report:?}");
    }

    #[test]
    fn checker_zero_candidate_exact() {
        let mut p = problem_with(KernelSpec::Constant { kappa: 1.0 }, (1.0, 1.0, 1.0, 1.0));
        p.initial = InitialSpec::Constant { value: 0.0 };
        let grid = Grid::new(&p.domain, 31).unwrap();
        let candidate = |_x: [f64; 2], _t: f64| 0.0;
        let times = [0.0, 0.5, 1.0];
        let report = check_supersub(&candidate, &p, &grid, &times, CandidateKind::Sub).unwrap();
        assert!(report.pass);
        assert_eq!(report.interior_worst, 0.0);
        assert_eq!(report.boundary_worst, 0.0);
        assert_eq!(report.initial_worst, 0.0);
    }

    #[test]
    fn kernel_lower_bound_constant_interval() {
        // two boundary points with unit weight: k̲ = 2κ for all t
        let p = problem_with(KernelSpec::Constant { kappa: 0.75 }, (1.0, 1.0, 3.0, 1.0));
        let grid = Grid::new(&p.domain, 21).unwrap();
        let ctx = RhsContext::new(p, grid).unwrap();
        for t in [0.0, 0.7, 3.0] {
            assert_abs_diff_eq!(kernel_lower_bound(&ctx, t).unwrap(), 1.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn mass_thresholds_m_above_one_plugin() {
        // m = 2, l = 3, |Ω| = 1, T0 = 1: the horizon bound is exactly 1.
        let mut p = problem_with(KernelSpec::Constant { kappa: 0.5 }, (0.25, 0.25, 3.0, 2.0));
        p.initial = InitialSpec::Constant { value: 2.0 };
        let grid = Grid::new(&p.domain, 41).unwrap();
        let report = mass_thresholds(&p, &grid, 1.0).unwrap();
        assert!(report.case_m_above_one);
        assert_abs_diff_eq!(report.k0, 1.0, epsilon = 1e-12);
        let horizon = report.bounds.iter().find(|b| b.name == "mass_growth_horizon").unwrap();
        assert_abs_diff_eq!(horizon.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn mass_thresholds_m_at_one_plugin() {
        // k0 = 1, b = 1, |Ω| = 1, l = 3, m = 1:
        // window bound = (1 − e^{−2T0})^{−1/2} → 1 as T0 → ∞.
        let mut p = problem_with(KernelSpec::Constant { kappa: 0.5 }, (0.25, 0.25, 3.0, 1.0));
        p.initial = InitialSpec::Constant { value: 2.0 };
        let grid = Grid::new(&p.domain, 41).unwrap();
        for (t0, expected) in [(1.0, (1.0 - (-2.0_f64).exp()).powf(-0.5)), (50.0, 1.0)] {
            let report = mass_thresholds(&p, &grid, t0).unwrap();
            let window = report.bounds.iter().find(|b| b.name == "exponential_window").unwrap();
            assert_abs_diff_eq!(window.value, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn mass_thresholds_need_positive_kernel_bound() {
        let p = problem_with(KernelSpec::Zero, (0.25, 0.25, 3.0, 1.0));
        let grid = Grid::new(&p.domain, 21).unwrap();
        assert!(matches!(
            mass_thresholds(&p, &grid, 1.0),
            Err(TheoryError::KernelLowerBound { .. })
        ));
    }

    #[test]
    fn mass_thresholds_need_l_branch() {
        let p = problem_with(KernelSpec::Constant { kappa: 1.0 }, (1.0, 1.0, 0.5, 1.0));
        let grid = Grid::new(&p.domain, 21).unwrap();
        assert!(matches!(
            mass_thresholds(&p, &grid, 1.0),
            Err(TheoryError::MassBranchPrecondition { .. })
        ));
    }
}
