//! Adaptive explicit time stepping, finite-time blow-up detection, and run
//! diagnostics.
//!
//! Stepping is explicit only: the nonlocal boundary term would make implicit
//! systems dense, and resolving blow-up needs tiny steps near the singular
//! time anyway. The step size tracks both the diffusion CFL limit and a
//! reaction scale built from the current sup norm, so the reaction never
//! moves the solution by more than a fixed fraction per step.
//!
//! A run ends in one of three ways: the horizon is reached (`Global`), the
//! blow-up detector fires (`BlowUp`: the sup norm crossed the ceiling, or the
//! step size collapsed to its floor while the sup norm kept growing), or the
//! step budget runs out (`Inconclusive`).

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{volume_quadrature, Field, Grid, GridError};
use crate::problem::{ConfigError, ProblemSpec};
use crate::rhs::{mass_rate, rhs_eval, RhsContext, RhsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Euler,
    Rk4,
}

/// Time-stepping controls. `record_dt`, when set, replaces stride-based
/// recording with records at fixed multiples of `record_dt`, which is what
/// nodewise comparisons across runs need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Nodes per axis.
    pub n: usize,
    pub cfl_safety: f64,
    pub reaction_safety: f64,
    pub t_end: f64,
    /// Blow-up ceiling on the sup norm.
    pub u_max: f64,
    /// Step-size floor; reaching it while the sup norm grows reads as blow-up.
    pub dt_min: f64,
    /// Accepted steps between trajectory records.
    pub record_stride: usize,
    pub record_dt: Option<f64>,
    pub scheme: Scheme,
    pub max_steps: u64,
    /// Keep full field snapshots at every record.
    pub store_snapshots: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 51,
            cfl_safety: 0.4,
            reaction_safety: 0.1,
            t_end: 1.0,
            u_max: 1e8,
            dt_min: 1e-14,
            record_stride: 10,
            record_dt: None,
            scheme: Scheme::Rk4,
            max_steps: 2_000_000,
            store_snapshots: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| -> Result<(), ConfigError> {
            Err(ConfigError::Invalid { key: key.into(), message })
        };
        if self.n < 3 {
            return invalid("solver.n", format!("needs at least 3 nodes per axis (got {})", self.n));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return invalid("solver.cfl_safety", format!("must lie in (0, 1] (got {})", self.cfl_safety));
        }
        if !(self.reaction_safety > 0.0 && self.reaction_safety <= 1.0) {
            return invalid(
                "solver.reaction_safety",
                format!("must lie in (0, 1] (got {})", self.reaction_safety),
            );
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return invalid("solver.t_end", format!("must be positive (got {})", self.t_end));
        }
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return invalid("solver.u_max", format!("must be positive (got {})", self.u_max));
        }
        if !(self.dt_min.is_finite() && self.dt_min > 0.0) {
            return invalid("solver.dt_min", format!("must be positive (got {})", self.dt_min));
        }
        if self.record_stride == 0 {
            return invalid("solver.record_stride", "must be at least 1".into());
        }
        if let Some(rdt) = self.record_dt {
            if !(rdt.is_finite() && rdt > 0.0) {
                return invalid("solver.record_dt", format!("must be positive (got {rdt})"));
            }
        }
        if self.max_steps == 0 {
            return invalid("solver.max_steps", "must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    Global,
    BlowUp,
    Inconclusive,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunStatus::Global => write!(f, "Global"),
            RunStatus::BlowUp => write!(f, "BlowUp"),
            RunStatus::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub sup_u: f64,
    pub min_u: f64,
    /// V(t) = ∫_Ω u dx.
    pub mass: f64,
    /// |ΔV/Δt − trapezoid of the instantaneous mass rate| against the
    /// previous record; 0 on the first record.
    pub mass_residual: f64,
    /// Step size in effect when the record was taken.
    pub dt: f64,
    /// Instantaneous dV/dt from the integral identity (flux + reaction −
    /// absorption + forcing); kept for the residual diagnostic.
    pub mass_rate: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub t_reached: f64,
    pub blowup_time_estimate: Option<f64>,
    pub blowup_time_uncertainty: Option<f64>,
    pub records: Vec<TrajectoryRecord>,
    /// Field snapshots at record times when `store_snapshots` is on.
    pub snapshots: Vec<(f64, Field)>,
    pub final_field: Field,
    /// Nodes clipped to zero across the run (stages and step results).
    pub clip_counter: u64,
    pub config_hash: String,
    /// Discrete compatibility residual of the initial data.
    pub compatibility_residual: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error("solver config inconsistent with problem: {0}")]
    Inconsistent(String),
}

/// Short hash identifying a (problem, solver) pair for auditable outputs.
pub fn config_hash(problem: &ProblemSpec, config: &SolverConfig) -> String {
    let bytes = serde_json::to_vec(&(problem, config)).expect("specs serialize");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Largest step the explicit scheme may take from state `u` at time `t`:
/// the diffusion CFL bound and a reaction bound
/// `reaction_safety / λ` with
/// `λ = a(p+q)M^{p+q−1}·max(|Ω|,1) + b·m·M^{m−1} + l·K·|Ω|·M^{l−1}`,
/// `M = max(sup u, 1)` and exponents clamped at zero from below.
pub fn stable_dt(u: &Field, t: f64, ctx: &RhsContext, config: &SolverConfig) -> f64 {
    let grid = ctx.grid();
    let mut inv = 0.0;
    for axis in 0..grid.dim() {
        let h = grid.spacing()[axis];
        inv += 1.0 / (h * h);
    }
    let dt_diff = config.cfl_safety / (2.0 * inv);

    let problem = ctx.problem();
    let m_sup = u.sup().max(1.0);
    let volume = grid.volume();
    let lambda = problem.a * (problem.p + problem.q) * m_sup.powf((problem.p + problem.q - 1.0).max(0.0)) * volume.max(1.0)
        + problem.b * problem.m * m_sup.powf((problem.m - 1.0).max(0.0))
        + problem.l * ctx.kernel_sup(t) * volume * m_sup.powf((problem.l - 1.0).max(0.0));

    if lambda > 0.0 {
        dt_diff.min(config.reaction_safety / lambda)
    } else {
        dt_diff
    }
}

/// Result of one explicit step.
pub enum StepOutcome {
    Advanced { field: Field, clipped: u64 },
    /// The update overflowed; the driver reads this as blow-up. A non-finite
    /// field is never returned.
    NonFinite,
}

fn clip_negative(f: &mut Field) -> u64 {
    let mut n = 0;
    for v in f.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
            n += 1;
        }
    }
    n
}

fn axpy(u: &Field, dt: f64, k: &Field) -> Field {
    Field::from(
        u.values()
            .iter()
            .zip(k.values())
            .map(|(a, b)| a + dt * b)
            .collect::<Vec<_>>(),
    )
}

/// One explicit step (forward Euler or classical RK4) followed by negative
/// clipping. RK4 stage inputs are clipped too, so the right-hand side only
/// ever sees admissible states.
pub fn step(
    u: &Field,
    t: f64,
    dt: f64,
    ctx: &RhsContext,
    scheme: Scheme,
) -> Result<StepOutcome, RhsError> {
    let mut clipped = 0;
    let eval = |t: f64, f: &Field| -> Result<Option<Field>, RhsError> {
        match rhs_eval(t, f, ctx) {
            Ok(k) => Ok(Some(k)),
            Err(RhsError::NonFinite) => Ok(None),
            Err(e) => Err(e),
        }
    };
    macro_rules! stage {
        ($t:expr, $f:expr) => {
            match eval($t, $f)? {
                Some(k) => k,
                None => return Ok(StepOutcome::NonFinite),
            }
        };
    }

    let mut next = match scheme {
        Scheme::Euler => {
            let k1 = stage!(t, u);
            axpy(u, dt, &k1)
        }
        Scheme::Rk4 => {
            let k1 = stage!(t, u);
            let mut u2 = axpy(u, 0.5 * dt, &k1);
            if !u2.is_finite() {
                return Ok(StepOutcome::NonFinite);
            }
            clipped += clip_negative(&mut u2);
            let k2 = stage!(t + 0.5 * dt, &u2);
            let mut u3 = axpy(u, 0.5 * dt, &k2);
            if !u3.is_finite() {
                return Ok(StepOutcome::NonFinite);
            }
            clipped += clip_negative(&mut u3);
            let k3 = stage!(t + 0.5 * dt, &u3);
            let mut u4 = axpy(u, dt, &k3);
            if !u4.is_finite() {
                return Ok(StepOutcome::NonFinite);
            }
            clipped += clip_negative(&mut u4);
            let k4 = stage!(t + dt, &u4);
            let sixth = dt / 6.0;
            Field::from(
                u.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        v + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    })
                    .collect::<Vec<_>>(),
            )
        }
    };
    if !next.is_finite() {
        return Ok(StepOutcome::NonFinite);
    }
    clipped += clip_negative(&mut next);
    Ok(StepOutcome::Advanced { field: next, clipped })
}

/// Guarded model exponent for the blow-up time extrapolation,
/// `ρ = max(p+q, m, l, 1.1)`. The theory proves blow-up but no rate; this is
/// a fitting heuristic, reported with an uncertainty.
pub fn blowup_fit_exponent(problem: &ProblemSpec) -> f64 {
    (problem.p + problem.q).max(problem.m).max(problem.l).max(1.1)
}

/// Fit `sup u(t) ≈ C·(T_b − t)^{−1/(ρ−1)}` on the trailing strictly
/// increasing records by regressing `(sup u)^{−(ρ−1)}` linearly against `t`;
/// the time intercept estimates `T_b`. Returns `(T_b, uncertainty)` or
/// `None` when the tail is too short, non-monotone, or inconsistent with
/// growth.
pub fn detect_blowup(records: &[TrajectoryRecord], rho: f64) -> Option<(f64, f64)> {
    // longest strictly-increasing suffix of sup values
    let mut start = records.len();
    for i in (0..records.len()).rev() {
        if i + 1 < records.len() && records[i].sup_u >= records[i + 1].sup_u {
            break;
        }
        start = i;
    }
    let tail = &records[start..];
    if tail.len() < 8 {
        return None;
    }
    let window = &tail[tail.len().saturating_sub(64)..];

    let n = window.len() as f64;
    let pts: Vec<(f64, f64)> = window
        .iter()
        .map(|r| (r.t, r.sup_u.powf(-(rho - 1.0))))
        .collect();
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    let intercept = y_mean - slope * t_mean;
    let t_b = -intercept / slope;
    let t_last = window.last().unwrap().t;
    if !t_b.is_finite() || t_b < t_last {
        return None;
    }

    // standard OLS error propagation onto the time intercept
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let s2 = ss_res / (n - 2.0);
    let var_slope = s2 / sxx;
    let var_intercept = s2 * (1.0 / n + t_mean * t_mean / sxx);
    let cov = -t_mean * s2 / sxx;
    let da = -1.0 / slope;
    let db = intercept / (slope * slope);
    let var_tb = (da * da * var_intercept + db * db * var_slope + 2.0 * da * db * cov).max(0.0);
    Some((t_b, var_tb.sqrt()))
}

/// Mass-balance residual between two consecutive records:
/// |ΔV/Δt − (rate₀ + rate₁)/2|.
pub fn mass_balance_residual(prev: &TrajectoryRecord, next: &TrajectoryRecord) -> f64 {
    let dt = next.t - prev.t;
    if dt <= 0.0 {
        return 0.0;
    }
    ((next.mass - prev.mass) / dt - 0.5 * (prev.mass_rate + next.mass_rate)).abs()
}

struct Recorder {
    records: Vec<TrajectoryRecord>,
    snapshots: Vec<(f64, Field)>,
    store_snapshots: bool,
}

impl Recorder {
    fn push(&mut self, t: f64, u: &Field, dt: f64, ctx: &RhsContext) -> Result<(), RhsError> {
        let mass = volume_quadrature(u, ctx.grid());
        let rate = mass_rate(t, u, ctx)?;
        let mut rec = TrajectoryRecord {
            t,
            sup_u: u.sup(),
            min_u: u.min(),
            mass,
            mass_residual: 0.0,
            dt,
            mass_rate: rate,
        };
        if let Some(prev) = self.records.last() {
            rec.mass_residual = mass_balance_residual(prev, &rec);
        }
        self.records.push(rec);
        if self.store_snapshots {
            self.snapshots.push((t, u.clone()));
        }
        Ok(())
    }

    fn last_t(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(f64::NEG_INFINITY)
    }
}

fn sup_increasing_tail(records: &[TrajectoryRecord], count: usize) -> bool {
    if records.len() < count {
        return false;
    }
    records[records.len() - count..]
        .windows(2)
        .all(|w| w[1].sup_u > w[0].sup_u)
}

/// Integrate the problem from `t = 0` until the horizon, blow-up detection,
/// or step-budget exhaustion.
pub fn solve(problem: &ProblemSpec, config: &SolverConfig) -> Result<RunResult, SolveError> {
    problem.validate()?;
    config.validate()?;
    let grid = Grid::new(&problem.domain, config.n)?;
    let ctx = RhsContext::new(problem.clone(), grid)?;

    if let Some(horizon) = ctx.tabulated_horizon() {
        if horizon < config.t_end {
            return Err(SolveError::Inconsistent(format!(
                "tabulated kernel ends at t = {horizon} but t_end = {}",
                config.t_end
            )));
        }
    }

    let mut u = problem
        .initial
        .realize(ctx.grid())
        .map_err(SolveError::Config)?;
    let sup0 = u.sup();
    if config.u_max <= sup0 {
        return Err(SolveError::Inconsistent(format!(
            "u_max = {} does not exceed the initial sup {sup0}",
            config.u_max
        )));
    }
    let dt0 = stable_dt(&u, 0.0, &ctx, config);
    if config.dt_min >= dt0 {
        return Err(SolveError::Inconsistent(format!(
            "dt_min = {} is not below the initial stable step {dt0}",
            config.dt_min
        )));
    }

    let compat = crate::rhs::compatibility_residual_impl(&ctx, &u)?;
    if compat > 1e-6 * (1.0 + sup0) {
        eprintln!(
            "warning: initial data miss the discrete compatibility condition by {compat:.3e}; \
             proceeding anyway"
        );
    }

    let hash = config_hash(problem, config);
    let mut recorder = Recorder {
        records: Vec::new(),
        snapshots: Vec::new(),
        store_snapshots: config.store_snapshots,
    };
    recorder.push(0.0, &u, dt0, &ctx)?;

    let t_eps = 1e-12 * config.t_end.max(1.0);
    let mut t = 0.0_f64;
    let mut steps: u64 = 0;
    let mut steps_since_record: usize = 0;
    let mut next_record = config.record_dt.map(|rdt| rdt.min(config.t_end));
    let mut clip_counter: u64 = 0;

    let status = loop {
        if config.t_end - t <= t_eps {
            break RunStatus::Global;
        }
        if steps >= config.max_steps {
            break RunStatus::Inconclusive;
        }

        let mut dt = stable_dt(&u, t, &ctx, config);
        let mut hit_floor = false;
        if dt <= config.dt_min {
            dt = config.dt_min;
            hit_floor = true;
        }
        dt = dt.min(config.t_end - t);
        if let Some(nr) = next_record {
            dt = dt.min(nr - t);
        }

        match step(&u, t, dt, &ctx, config.scheme)? {
            StepOutcome::Advanced { field, clipped } => {
                u = field;
                clip_counter += clipped;
            }
            StepOutcome::NonFinite => {
                // overflow inside the step: treat as a ceiling crossing
                break RunStatus::BlowUp;
            }
        }
        t += dt;
        steps += 1;
        steps_since_record += 1;

        let mut due = false;
        match (config.record_dt, next_record) {
            (Some(rdt), Some(nr)) => {
                if nr - t <= 1e-9 * rdt {
                    due = true;
                    let k = (nr / rdt).round() + 1.0;
                    next_record = if nr >= config.t_end - t_eps {
                        None
                    } else {
                        Some((k * rdt).min(config.t_end))
                    };
                }
            }
            _ => {
                if steps_since_record >= config.record_stride {
                    due = true;
                }
            }
        }
        if due {
            recorder.push(t, &u, dt, &ctx)?;
            steps_since_record = 0;
        }

        if u.sup() >= config.u_max {
            break RunStatus::BlowUp;
        }
        if hit_floor && sup_increasing_tail(&recorder.records, 8) {
            break RunStatus::BlowUp;
        }
    };

    if t > recorder.last_t() + 1e-15 {
        recorder.push(t, &u, recorder.records.last().map(|r| r.dt).unwrap_or(0.0), &ctx)?;
    }

    let (estimate, uncertainty) = if status == RunStatus::BlowUp {
        match detect_blowup(&recorder.records, blowup_fit_exponent(problem)) {
            Some((tb, unc)) => (Some(tb), Some(unc)),
            None => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(RunResult {
        status,
        t_reached: t,
        blowup_time_estimate: estimate,
        blowup_time_uncertainty: uncertainty,
        records: recorder.records,
        snapshots: recorder.snapshots,
        final_field: u,
        clip_counter,
        config_hash: hash,
        compatibility_residual: compat,
    })
}

/// Trajectory CSV with the columns `t,sup_u,min_u,V,mass_residual,dt`.
pub fn trajectory_to_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from("t,sup_u,min_u,V,mass_residual,dt\n");
    for r in records {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?}",
            r.t, r.sup_u, r.min_u, r.mass, r.mass_residual, r.dt
        );
    }
    out
}

/// Run summary JSON with the keys `status`, `T_reached`,
/// `blowup_time_estimate`, `blowup_time_uncertainty`, `clip_counter`,
/// `config_hash`.
pub fn summary_json(result: &RunResult) -> serde_json::Value {
    serde_json::json!({
        "status": result.status.to_string(),
        "T_reached": result.t_reached,
        "blowup_time_estimate": result.blowup_time_estimate,
        "blowup_time_uncertainty": result.blowup_time_uncertainty,
        "clip_counter": result.clip_counter,
        "config_hash": result.config_hash,
    })
}
