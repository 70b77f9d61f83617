//! Command-line front end: single runs, parameter sweeps, supersolution
//! certificates, ε-families, and the scalar helpers.
//!
//! Exit codes: 0 success/agreement, 1 verification failure/disagreement,
//! 2 invalid input, 3 inconclusive run. Outputs carry a `config_hash` and no
//! timestamps, so rerunning a command rewrites byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::grid::{field_to_csv, Grid};
use crate::integrate::{
    solve, summary_json, trajectory_to_csv, RunStatus, SolverConfig,
};
use crate::problem::{parse_config_table, ConfigError, InitialSpec, ProblemSpec};
use crate::regularize::{maximal_solution, report_json, EpsilonSchedule, MONOTONICITY_TOL};
use crate::rhs::RhsContext;
use crate::theory::{
    build_supersolution, check_supersub, classify_regime, kernel_lower_bound, mass_thresholds,
    ode_blowup_time, ode_comparison, CandidateKind, RegimeLabel, TheoryError,
};

#[derive(Parser)]
#[command(
    name = "nlheat",
    about = "Simulation and blow-up laboratory for a nonlocal semilinear heat equation \
             with a nonlocal flux boundary condition",
    version
)]
struct Cli {
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker budget for sweeps and ε-families.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Reserved; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured instance; writes trajectory.csv,
    /// summary.json and final_field.csv.
    Solve { config: PathBuf },
    /// Run a parameter sweep and compare numeric verdicts against the
    /// regime classifier; writes sweep.csv plus per-point summaries.
    Sweep { spec: PathBuf },
    /// Build the exponential supersolution for a sub-linear instance and
    /// check the three defining inequalities on the grid.
    VerifySuper {
        config: PathBuf,
        /// Number of sample times on [0, t_end].
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Solve the ε-regularized family approximating the maximal solution
    /// and report its nodewise ordering.
    Maximal {
        config: PathBuf,
        /// Comma-separated decreasing ε schedule; defaults to
        /// 0.1, 0.05, 0.025, 0.0125.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Blow-up time of the comparison ODE f' = a·omega·f^rho − b·f^m.
    OdeTime {
        #[arg(long)]
        a: f64,
        /// Domain volume |Ω|.
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        b: f64,
        /// Effective growth exponent (p+q of the field model).
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        f0: f64,
    },
    /// Classify an exponent tuple into global / blow-up / gap.
    Classify {
        #[arg(allow_negative_numbers = true)]
        p: f64,
        #[arg(allow_negative_numbers = true)]
        q: f64,
        #[arg(allow_negative_numbers = true)]
        l: f64,
        #[arg(allow_negative_numbers = true)]
        m: f64,
        /// Whether inf_y ∫_∂Ω k(x,y,0) dS_x is positive (`true`/`false`).
        #[arg(action = clap::ArgAction::Set)]
        kbar0: bool,
    },
}

/// Parse and dispatch; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Entry point taking explicit arguments, for tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Solve { ref config } => cmd_solve(config, &cli.out),
        Command::Sweep { ref spec } => cmd_sweep(spec, &cli.out, cli.workers),
        Command::VerifySuper { ref config, samples } => cmd_verify_super(config, &cli.out, samples),
        Command::Maximal { ref config, ref epsilons } => {
            cmd_maximal(config, &cli.out, epsilons.clone(), cli.workers)
        }
        Command::OdeTime { a, omega, b, rho, m, f0 } => cmd_ode_time(a, omega, b, rho, m, f0),
        Command::Classify { p, q, l, m, kbar0 } => cmd_classify(p, q, l, m, kbar0),
    }
}

fn fail_invalid(err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    2
}

fn load_config(path: &Path) -> Result<(ProblemSpec, SolverConfig), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    crate::problem::parse_config(&text).map_err(|e| e.to_string())
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// `solve <config>`: exit 0 on Global/BlowUp, 3 on Inconclusive, 2 on
/// invalid input.
pub fn cmd_solve(config_path: &Path, out: &Path) -> i32 {
    let (problem, solver) = match load_config(config_path) {
        Ok(v) => v,
        Err(e) => return fail_invalid(e),
    };
    let result = match solve(&problem, &solver) {
        Ok(r) => r,
        Err(e) => return fail_invalid(e),
    };
    let grid = match Grid::new(&problem.domain, solver.n) {
        Ok(g) => g,
        Err(e) => return fail_invalid(e),
    };
    let summary = summary_json(&result);
    let pretty = serde_json::to_string_pretty(&summary).expect("serializable");
    if let Err(e) = write_out(out, "trajectory.csv", &trajectory_to_csv(&result.records))
        .and_then(|_| write_out(out, "summary.json", &pretty))
        .and_then(|_| write_out(out, "final_field.csv", &field_to_csv(&result.final_field, &grid)))
    {
        return fail_invalid(e);
    }
    println!("{pretty}");
    match result.status {
        RunStatus::Global | RunStatus::BlowUp => 0,
        RunStatus::Inconclusive => 3,
    }
}

/// `verify-super <config>`: exit 0 on PASS, 1 on FAIL, 2 when the
/// construction branch does not apply.
pub fn cmd_verify_super(config_path: &Path, out: &Path, samples: usize) -> i32 {
    let (problem, solver) = match load_config(config_path) {
        Ok(v) => v,
        Err(e) => return fail_invalid(e),
    };
    let grid = match Grid::new(&problem.domain, solver.n) {
        Ok(g) => g,
        Err(e) => return fail_invalid(e),
    };
    let supersolution = match build_supersolution(&problem, &grid, solver.t_end) {
        Ok(s) => s,
        Err(e @ TheoryError::BranchPrecondition { .. }) => return fail_invalid(e),
        Err(e) => return fail_invalid(e),
    };
    let samples = samples.max(2);
    let times: Vec<f64> = (0..samples)
        .map(|i| solver.t_end * i as f64 / (samples - 1) as f64)
        .collect();
    let report = match check_supersub(&supersolution, &problem, &grid, &times, CandidateKind::Super)
    {
        Ok(r) => r,
        Err(e) => return fail_invalid(e),
    };
    let json = serde_json::json!({
        "params": supersolution.params,
        "report": report,
    });
    let pretty = serde_json::to_string_pretty(&json).expect("serializable");
    if let Err(e) = write_out(out, "supersolution.json", &pretty) {
        return fail_invalid(e);
    }
    println!("{pretty}");
    if report.pass {
        0
    } else {
        1
    }
}

/// `maximal <config>`: exit 0 when the ε-family is monotone within
/// tolerance, 1 otherwise, 2 on invalid input.
pub fn cmd_maximal(
    config_path: &Path,
    out: &Path,
    epsilons: Option<Vec<f64>>,
    workers: Option<usize>,
) -> i32 {
    let (problem, solver) = match load_config(config_path) {
        Ok(v) => v,
        Err(e) => return fail_invalid(e),
    };
    let schedule = match epsilons {
        Some(eps) => match EpsilonSchedule::new(eps) {
            Ok(s) => s,
            Err(e) => return fail_invalid(e),
        },
        None => EpsilonSchedule::default(),
    };
    let run = || maximal_solution(&problem, &schedule, &solver);
    let output = match with_pool(workers, run) {
        Ok(o) => o,
        Err(e) => return fail_invalid(e),
    };
    let json = report_json(&output.report);
    let pretty = serde_json::to_string_pretty(&json).expect("serializable");
    let grid = match Grid::new(&problem.domain, solver.n) {
        Ok(g) => g,
        Err(e) => return fail_invalid(e),
    };
    if let Err(e) = write_out(out, "maximal.json", &pretty)
        .and_then(|_| write_out(out, "maximal_limit.csv", &field_to_csv(&output.limit, &grid)))
    {
        return fail_invalid(e);
    }
    println!("{pretty}");
    if output.report.max_violation <= MONOTONICITY_TOL {
        0
    } else {
        1
    }
}

/// `ode-time`: print the comparison-ODE blow-up time as JSON.
pub fn cmd_ode_time(a: f64, omega: f64, b: f64, rho: f64, m: f64, f0: f64) -> i32 {
    match ode_comparison(a, omega, b, rho, m, f0) {
        Ok(cmp) => {
            let json = serde_json::json!({
                "f0": cmp.f0,
                "equilibrium": cmp.equilibrium,
                "t0": cmp.blowup_time,
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("serializable"));
            0
        }
        Err(e) => fail_invalid(e),
    }
}

/// `classify`: print the regime label and the fired conditions as JSON.
pub fn cmd_classify(p: f64, q: f64, l: f64, m: f64, kbar0: bool) -> i32 {
    if [p, q, l, m].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return fail_invalid("exponents must be positive");
    }
    let class = classify_regime(p, q, l, m, kbar0);
    let json = serde_json::json!({
        "label": class.label.to_string(),
        "citations": class.citations,
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("serializable"));
    0
}

// ── sweeps ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    P,
    Q,
    L,
    M,
    A,
    B,
    U0Amp,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::P => "p",
            SweepAxis::Q => "q",
            SweepAxis::L => "l",
            SweepAxis::M => "m",
            SweepAxis::A => "a",
            SweepAxis::B => "b",
            SweepAxis::U0Amp => "u0_amp",
        }
    }

    const ALL: [SweepAxis; 7] = [
        SweepAxis::P,
        SweepAxis::Q,
        SweepAxis::L,
        SweepAxis::M,
        SweepAxis::A,
        SweepAxis::B,
        SweepAxis::U0Amp,
    ];
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axes: Vec<(SweepAxis, Vec<f64>)>,
    pub budget: usize,
}

fn parse_sweep_file(text: &str) -> Result<(ProblemSpec, SolverConfig, SweepSpec), ConfigError> {
    let root: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let (problem, solver) = parse_config_table(&root, &["sweep"])?;

    let Some(toml::Value::Table(sweep_table)) = root.get("sweep") else {
        return Err(ConfigError::MissingKey("sweep".into()));
    };
    let mut axes = Vec::new();
    let mut budget = 256_usize;
    for (key, value) in sweep_table {
        if key == "budget" {
            match value {
                toml::Value::Integer(n) if *n > 0 => budget = *n as usize,
                _ => {
                    return Err(ConfigError::Invalid {
                        key: "sweep.budget".into(),
                        message: "must be a positive integer".into(),
                    })
                }
            }
            continue;
        }
        let axis = SweepAxis::ALL
            .iter()
            .copied()
            .find(|a| a.name() == key)
            .ok_or_else(|| ConfigError::UnknownKey(format!("sweep.{key}")))?;
        let toml::Value::Array(items) = value else {
            return Err(ConfigError::Invalid {
                key: format!("sweep.{key}"),
                message: "must be an array of numbers".into(),
            });
        };
        let mut vals = Vec::with_capacity(items.len());
        for item in items {
            match item {
                toml::Value::Float(f) => vals.push(*f),
                toml::Value::Integer(i) => vals.push(*i as f64),
                other => {
                    return Err(ConfigError::Invalid {
                        key: format!("sweep.{key}"),
                        message: format!("expected numbers, got {other}"),
                    })
                }
            }
        }
        if vals.is_empty() {
            return Err(ConfigError::Invalid {
                key: format!("sweep.{key}"),
                message: "axis must not be empty".into(),
            });
        }
        axes.push((axis, vals));
    }
    if axes.is_empty() {
        return Err(ConfigError::Invalid {
            key: "sweep".into(),
            message: "needs at least one axis".into(),
        });
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    if total > budget {
        return Err(ConfigError::Invalid {
            key: "sweep".into(),
            message: format!("{total} points exceed the budget of {budget}"),
        });
    }
    Ok((problem, solver, SweepSpec { axes, budget }))
}

fn apply_axis(problem: &mut ProblemSpec, axis: SweepAxis, value: f64) -> Result<(), String> {
    match axis {
        SweepAxis::P => problem.p = value,
        SweepAxis::Q => problem.q = value,
        SweepAxis::L => problem.l = value,
        SweepAxis::M => problem.m = value,
        SweepAxis::A => problem.a = value,
        SweepAxis::B => problem.b = value,
        SweepAxis::U0Amp => match &mut problem.initial {
            InitialSpec::Constant { value: v } => *v = value,
            InitialSpec::Bump { amplitude, .. } => *amplitude = value,
            InitialSpec::Tabulated { .. } => {
                return Err("u0_amp axis needs constant or bump initial data".into())
            }
        },
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Agreement {
    Agree,
    Disagree,
    Gap,
    Unasserted,
}

impl Agreement {
    fn as_str(self) -> &'static str {
        match self {
            Agreement::Agree => "true",
            Agreement::Disagree => "false",
            Agreement::Gap => "gap",
            Agreement::Unasserted => "n/a",
        }
    }
}

struct SweepRow {
    problem: ProblemSpec,
    u0_amp: f64,
    theory_label: String,
    numeric_status: String,
    t_est: Option<f64>,
    agreement: Agreement,
    summary: Option<serde_json::Value>,
}

/// Does the theory actually promise blow-up by `t_end` for this data? The
/// sweep only asserts a blow-up verdict when it does: either the constant
/// subsolution started at `min u0` blows up within the horizon, or the mass
/// thresholds are met.
fn blowup_asserted(
    problem: &ProblemSpec,
    grid: &Grid,
    solver: &SolverConfig,
    kbar0_positive: bool,
) -> Result<bool, String> {
    let threshold = problem.m.max(1.0);
    if problem.p + problem.q > threshold && problem.a > 0.0 {
        let u0 = problem.initial.realize(grid).map_err(|e| e.to_string())?;
        let f0 = u0.min();
        if f0 > 0.0 {
            if let Some(t0) =
                ode_blowup_time(problem.a, grid.volume(), problem.b, problem.p + problem.q, problem.m, f0)
                    .map_err(|e| e.to_string())?
            {
                if t0 <= solver.t_end {
                    return Ok(true);
                }
            }
        }
    }
    if problem.l > threshold && kbar0_positive {
        match mass_thresholds(problem, grid, solver.t_end) {
            Ok(report) => return Ok(report.met),
            Err(TheoryError::KernelLowerBound { .. }) => return Ok(false),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(false)
}

fn evaluate_point(problem: ProblemSpec, solver: &SolverConfig, u0_amp: f64) -> SweepRow {
    let fallible = || -> Result<(String, String, Option<f64>, Agreement, Option<serde_json::Value>), String> {
        problem.validate().map_err(|e| e.to_string())?;
        let grid = Grid::new(&problem.domain, solver.n).map_err(|e| e.to_string())?;
        let ctx = RhsContext::new(problem.clone(), grid.clone()).map_err(|e| e.to_string())?;
        let kbar0 = kernel_lower_bound(&ctx, 0.0).map_err(|e| e.to_string())? > 0.0;
        let class = classify_regime(problem.p, problem.q, problem.l, problem.m, kbar0);
        let run = solve(&problem, solver).map_err(|e| e.to_string())?;
        let agreement = match class.label {
            RegimeLabel::GlobalAllData => {
                if run.status == RunStatus::Global {
                    Agreement::Agree
                } else {
                    Agreement::Disagree
                }
            }
            RegimeLabel::TheoryGap => Agreement::Gap,
            RegimeLabel::BlowUpLargeData => {
                if blowup_asserted(&problem, &grid, solver, kbar0)? {
                    if run.status == RunStatus::BlowUp {
                        Agreement::Agree
                    } else {
                        Agreement::Disagree
                    }
                } else {
                    Agreement::Unasserted
                }
            }
        };
        Ok((
            class.label.to_string(),
            run.status.to_string(),
            run.blowup_time_estimate,
            agreement,
            Some(summary_json(&run)),
        ))
    };
    match fallible() {
        Ok((theory_label, numeric_status, t_est, agreement, summary)) => SweepRow {
            problem,
            u0_amp,
            theory_label,
            numeric_status,
            t_est,
            agreement,
            summary,
        },
        Err(e) => SweepRow {
            problem,
            u0_amp,
            theory_label: "error".into(),
            numeric_status: format!("error: {e}"),
            t_est: None,
            agreement: Agreement::Unasserted,
            summary: None,
        },
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// `sweep <spec>`: exit 0 iff no disagreement rows.
pub fn cmd_sweep(spec_path: &Path, out: &Path, workers: Option<usize>) -> i32 {
    let text = match fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => return fail_invalid(format!("cannot read {}: {e}", spec_path.display())),
    };
    let (base_problem, solver, sweep) = match parse_sweep_file(&text) {
        Ok(v) => v,
        Err(e) => return fail_invalid(e),
    };

    // cross product in file order of the axes
    let mut points: Vec<ProblemSpec> = vec![base_problem.clone()];
    for (axis, values) in &sweep.axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for point in &points {
            for &v in values {
                let mut candidate = point.clone();
                if let Err(e) = apply_axis(&mut candidate, *axis, v) {
                    return fail_invalid(e);
                }
                next.push(candidate);
            }
        }
        points = next;
    }

    let rows: Vec<SweepRow> = with_pool(workers, || {
        use rayon::prelude::*;
        points
            .into_par_iter()
            .map(|p| {
                let u0_amp = match &p.initial {
                    InitialSpec::Constant { value } => *value,
                    InitialSpec::Bump { amplitude, .. } => *amplitude,
                    InitialSpec::Tabulated { .. } => f64::NAN,
                };
                evaluate_point(p, &solver, u0_amp)
            })
            .collect()
    });

    let mut csv = String::from("p,q,l,m,a,b,u0_amp,theory_label,numeric_status,T_est,agreement\n");
    for row in &rows {
        let t_est = row.t_est.map(|t| format!("{t:?}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{}",
            row.problem.p,
            row.problem.q,
            row.problem.l,
            row.problem.m,
            row.problem.a,
            row.problem.b,
            row.u0_amp,
            row.theory_label,
            row.numeric_status,
            t_est,
            row.agreement.as_str()
        );
    }
    if let Err(e) = write_out(out, "sweep.csv", &csv) {
        return fail_invalid(e);
    }
    for (idx, row) in rows.iter().enumerate() {
        if let Some(summary) = &row.summary {
            let dir = out.join(format!("point_{idx:03}"));
            let pretty = serde_json::to_string_pretty(summary).expect("serializable");
            if let Err(e) = write_out(&dir, "summary.json", &pretty) {
                return fail_invalid(e);
            }
        }
    }
    print!("{csv}");
    let disagreements = rows.iter().filter(|r| r.agreement == Agreement::Disagree).count();
    if disagreements == 0 {
        0
    } else {
        eprintln!("{disagreements} disagreement row(s)");
        1
    }
}
