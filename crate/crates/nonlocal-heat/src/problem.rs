//! Model instances: coefficients, exponents, domain geometry, boundary
//! kernel, initial data, and the flat-key configuration format.
//!
//! A [`ProblemSpec`] is immutable after construction and safe to share
//! read-only across concurrent runs.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Field, Grid};
use crate::integrate::{Scheme, SolverConfig};

/// Domain geometry: an interval `[0, L]` or an axis-aligned rectangle
/// `[0, Lx] × [0, Ly]`.
///
/// Rectangles are admitted even though the continuum theory assumes a smooth
/// boundary; corner nodes get averaged outward normals and half a quadrature
/// weight from each adjacent edge, and results near corners are reported but
/// not certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainSpec {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } => 2,
        }
    }

    /// |Ω|.
    pub fn volume(&self) -> f64 {
        match *self {
            DomainSpec::Interval { length } => length,
            DomainSpec::Rectangle { lx, ly } => lx * ly,
        }
    }

    /// |∂Ω|: counting measure 2 in 1-D, perimeter in 2-D.
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { .. } => 2.0,
            DomainSpec::Rectangle { lx, ly } => 2.0 * (lx + ly),
        }
    }
}

/// Affine spatial profile `c0 + cx·x + cy·y`, the config-expressible factor
/// of a separable kernel. Being affine, its extrema over the domain sit at
/// corners, so nonnegativity checks are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineProfile {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
}

impl AffineProfile {
    pub fn constant(c0: f64) -> Self {
        AffineProfile { c0, cx: 0.0, cy: 0.0 }
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.c0 + self.cx * p[0] + self.cy * p[1]
    }

    fn min_over(&self, domain: &DomainSpec) -> f64 {
        let (lx, ly) = match *domain {
            DomainSpec::Interval { length } => (length, 0.0),
            DomainSpec::Rectangle { lx, ly } => (lx, ly),
        };
        let mut m = f64::INFINITY;
        for &x in &[0.0, lx] {
            for &y in &[0.0, ly] {
                m = m.min(self.eval([x, y]));
            }
        }
        m
    }
}

/// Affine time profile `c0 + ct·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineTime {
    pub c0: f64,
    pub ct: f64,
}

impl AffineTime {
    pub fn constant(c0: f64) -> Self {
        AffineTime { c0, ct: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.c0 + self.ct * t
    }
}

/// Boundary kernel `k(x, y, t)` with `x ∈ ∂Ω`, `y ∈ Ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum KernelSpec {
    Zero,
    Constant {
        kappa: f64,
    },
    /// `k(x, y, t) = g(x)·h(y)·τ(t)` with affine factors.
    Separable {
        g: AffineProfile,
        h: AffineProfile,
        tau: AffineTime,
    },
    /// Samples on the boundary-node × volume-node grid at the given times,
    /// interpolated piecewise-linearly in `t`. Evaluation outside
    /// `[times[0], times[last]]` is an error.
    Tabulated {
        times: Vec<f64>,
        /// `values[ti][bi][vi]`, shape `times.len() × n_boundary × n_volume`.
        values: Vec<Vec<Vec<f64>>>,
    },
}

impl KernelSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, KernelSpec::Zero)
    }
}

/// Initial data `u0 ≥ 0`, realized as a nodal field on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    /// `baseline + amplitude·cos²(π r / 2)` for `r = |x − center|/width ≤ 1`,
    /// `baseline` outside: a C¹ compactly supported bump on a flat floor.
    Bump {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
        baseline: f64,
    },
    /// Explicit nodal values; the length must match the grid.
    Tabulated {
        values: Vec<f64>,
    },
}

impl InitialSpec {
    /// Sample onto a grid.
    pub fn realize(&self, grid: &Grid) -> Result<Field, ConfigError> {
        match self {
            InitialSpec::Constant { value } => Ok(Field::constant(*value, grid.num_nodes())),
            InitialSpec::Bump {
                amplitude,
                center,
                width,
                baseline,
            } => Ok(grid.field_from_fn(|c| {
                let dx = c[0] - center[0];
                let dy = c[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt() / width;
                if r < 1.0 {
                    baseline + amplitude * (std::f64::consts::FRAC_PI_2 * r).cos().powi(2)
                } else {
                    *baseline
                }
            })),
            InitialSpec::Tabulated { values } => {
                if values.len() != grid.num_nodes() {
                    return Err(ConfigError::Invalid {
                        key: "initial.values".into(),
                        message: format!(
                            "has {} entries but the grid has {} nodes",
                            values.len(),
                            grid.num_nodes()
                        ),
                    });
                }
                Ok(Field::from(values.clone()))
            }
        }
    }

    /// Pointwise lift `u0 + ε` used by the regularized auxiliary problem.
    pub fn lifted(&self, eps: f64) -> InitialSpec {
        match self {
            InitialSpec::Constant { value } => InitialSpec::Constant { value: value + eps },
            InitialSpec::Bump {
                amplitude,
                center,
                width,
                baseline,
            } => InitialSpec::Bump {
                amplitude: *amplitude,
                center: *center,
                width: *width,
                baseline: baseline + eps,
            },
            InitialSpec::Tabulated { values } => InitialSpec::Tabulated {
                values: values.iter().map(|v| v + eps).collect(),
            },
        }
    }
}

/// Extra source term on the right-hand side.
///
/// `Constant` carries the `+b·ε^m` source of the regularized auxiliary
/// problem; `Custom` is the manufactured-solution hook and exists only for
/// verification — it is not expressible in a configuration file.
#[derive(Clone)]
pub enum ForcingSpec {
    Constant { value: f64 },
    Custom(Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>),
}

impl ForcingSpec {
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        match self {
            ForcingSpec::Constant { value } => *value,
            ForcingSpec::Custom(f) => f(x, t),
        }
    }
}

impl fmt::Debug for ForcingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingSpec::Constant { value } => write!(f, "Constant {{ value: {value} }}"),
            ForcingSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for ForcingSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ForcingSpec::Constant { value: a }, ForcingSpec::Constant { value: b }) => a == b,
            (ForcingSpec::Custom(a), ForcingSpec::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Serialize for ForcingSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            ForcingSpec::Constant { value } => {
                let mut st = s.serialize_struct("ForcingSpec", 2)?;
                st.serialize_field("kind", "constant")?;
                st.serialize_field("value", value)?;
                st.end()
            }
            ForcingSpec::Custom(_) => {
                let mut st = s.serialize_struct("ForcingSpec", 1)?;
                st.serialize_field("kind", "custom")?;
                st.end()
            }
        }
    }
}

/// The full model instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    /// Nonlocal reaction gain.
    pub a: f64,
    /// Absorption gain.
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub m: f64,
    pub l: f64,
    pub domain: DomainSpec,
    pub kernel: KernelSpec,
    pub initial: InitialSpec,
    /// Verification hook; `None` in theorem-checking modes.
    pub forcing: Option<ForcingSpec>,
    /// Permits the reduced modes `a = 0` / `b = 0` used by oracle tests.
    pub extensions: bool,
}

impl ProblemSpec {
    /// Check every invariant; parse_config calls this and direct API
    /// construction should too.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| -> Result<(), ConfigError> {
            Err(ConfigError::Invalid { key: key.into(), message })
        };

        for (key, v) in [
            ("model.p", self.p),
            ("model.q", self.q),
            ("model.m", self.m),
            ("model.l", self.l),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return invalid(key, format!("must be positive (got {v})"));
            }
        }
        for (key, v) in [("model.a", self.a), ("model.b", self.b)] {
            if !v.is_finite() || v < 0.0 {
                return invalid(key, format!("must be nonnegative (got {v})"));
            }
            if v == 0.0 && !self.extensions {
                return invalid(
                    key,
                    "must be positive; the reduced zero-gain mode needs model.extensions = true"
                        .into(),
                );
            }
        }

        match self.domain {
            DomainSpec::Interval { length } => {
                if !(length.is_finite() && length > 0.0) {
                    return invalid("domain.L", format!("must be positive (got {length})"));
                }
            }
            DomainSpec::Rectangle { lx, ly } => {
                if !(lx.is_finite() && lx > 0.0) {
                    return invalid("domain.Lx", format!("must be positive (got {lx})"));
                }
                if !(ly.is_finite() && ly > 0.0) {
                    return invalid("domain.Ly", format!("must be positive (got {ly})"));
                }
            }
        }

        match &self.kernel {
            KernelSpec::Zero => {}
            KernelSpec::Constant { kappa } => {
                if !(kappa.is_finite() && *kappa >= 0.0) {
                    return invalid("kernel.kappa", format!("must be nonnegative (got {kappa})"));
                }
            }
            KernelSpec::Separable { g, h, tau } => {
                if g.min_over(&self.domain) < 0.0 {
                    return invalid("kernel.g0", "boundary profile goes negative on the domain".into());
                }
                if h.min_over(&self.domain) < 0.0 {
                    return invalid("kernel.h0", "volume profile goes negative on the domain".into());
                }
                if tau.eval(0.0) < 0.0 {
                    return invalid("kernel.tau0", "time profile is negative at t = 0".into());
                }
            }
            KernelSpec::Tabulated { times, values } => {
                if times.is_empty() {
                    return invalid("kernel.times", "must not be empty".into());
                }
                if times[0] > 0.0 {
                    return invalid("kernel.times", "must start at or before t = 0".into());
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return invalid("kernel.times", "must be strictly increasing".into());
                }
                if values.len() != times.len() {
                    return invalid(
                        "kernel.values",
                        format!("has {} slices for {} times", values.len(), times.len()),
                    );
                }
                let nb = values[0].len();
                for slice in values {
                    if slice.len() != nb {
                        return invalid("kernel.values", "slices have inconsistent shapes".into());
                    }
                    for row in slice {
                        if row.len() != values[0][0].len() {
                            return invalid("kernel.values", "slices have inconsistent shapes".into());
                        }
                        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                            return invalid("kernel.values", "samples must be nonnegative".into());
                        }
                    }
                }
            }
        }

        match &self.initial {
            InitialSpec::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return invalid("initial.A", format!("must be nonnegative (got {value})"));
                }
            }
            InitialSpec::Bump {
                amplitude,
                width,
                baseline,
                ..
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return invalid("initial.amplitude", format!("must be nonnegative (got {amplitude})"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return invalid("initial.width", format!("must be positive (got {width})"));
                }
                if !(baseline.is_finite() && *baseline >= 0.0) {
                    return invalid("initial.baseline", format!("must be nonnegative (got {baseline})"));
                }
            }
            InitialSpec::Tabulated { values } => {
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return invalid("initial.values", "nodal values must be nonnegative".into());
                }
            }
        }

        Ok(())
    }
}

/// `max(p+q, l)` over the boundary blow-up scale — the quantity the global
/// and blow-up regime conditions compare against `1` and `m`.
pub fn growth_exponent(p: &ProblemSpec) -> f64 {
    (p.p + p.q).max(p.l)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing config key `{0}`")]
    MissingKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

// ── configuration document ──────────────────────────────────────────

struct Section<'a> {
    name: &'a str,
    table: toml::map::Map<String, toml::Value>,
    seen: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, table: toml::map::Map<String, toml::Value>) -> Self {
        Section { name, table, seen: Vec::new() }
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{}", self.name, k)
    }

    fn take(&mut self, k: &str) -> Option<toml::Value> {
        self.seen.push(k.to_string());
        self.table.get(k).cloned()
    }

    fn float(&mut self, k: &str) -> Result<Option<f64>, ConfigError> {
        let key = self.key(k);
        match self.take(k) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(f)),
            Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(ConfigError::Invalid {
                key,
                message: format!("expected a number, got {other}"),
            }),
        }
    }

    fn require_float(&mut self, k: &str) -> Result<f64, ConfigError> {
        self.float(k)?.ok_or_else(|| ConfigError::MissingKey(self.key(k)))
    }

    fn integer(&mut self, k: &str) -> Result<Option<i64>, ConfigError> {
        let key = self.key(k);
        match self.take(k) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) => Ok(Some(i)),
            Some(other) => Err(ConfigError::Invalid {
                key,
                message: format!("expected an integer, got {other}"),
            }),
        }
    }

    fn boolean(&mut self, k: &str) -> Result<Option<bool>, ConfigError> {
        let key = self.key(k);
        match self.take(k) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(b)),
            Some(other) => Err(ConfigError::Invalid {
                key,
                message: format!("expected a boolean, got {other}"),
            }),
        }
    }

    fn string(&mut self, k: &str) -> Result<Option<String>, ConfigError> {
        let key = self.key(k);
        match self.take(k) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(ConfigError::Invalid {
                key,
                message: format!("expected a string, got {other}"),
            }),
        }
    }

    fn require_string(&mut self, k: &str) -> Result<String, ConfigError> {
        self.string(k)?.ok_or_else(|| ConfigError::MissingKey(self.key(k)))
    }

    fn float_array(&mut self, k: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let key = self.key(k);
        match self.take(k) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Float(f) => out.push(f),
                        toml::Value::Integer(i) => out.push(i as f64),
                        other => {
                            return Err(ConfigError::Invalid {
                                key,
                                message: format!("expected numbers, got {other}"),
                            })
                        }
                    }
                }
                Ok(Some(out))
            }
            Some(other) => Err(ConfigError::Invalid {
                key,
                message: format!("expected an array, got {other}"),
            }),
        }
    }

    /// Error on any key never consumed by a getter.
    fn finish(self) -> Result<(), ConfigError> {
        for k in self.table.keys() {
            if !self.seen.iter().any(|s| s == k) {
                return Err(ConfigError::UnknownKey(self.key(k)));
            }
        }
        Ok(())
    }
}

fn nested_float_array_3(
    section: &mut Section<'_>,
    k: &str,
) -> Result<Option<Vec<Vec<Vec<f64>>>>, ConfigError> {
    let key = section.key(k);
    let invalid = |message: String| ConfigError::Invalid { key: key.clone(), message };
    match section.take(k) {
        None => Ok(None),
        Some(toml::Value::Array(slices)) => {
            let mut out = Vec::with_capacity(slices.len());
            for slice in slices {
                let toml::Value::Array(rows) = slice else {
                    return Err(invalid("expected a 3-level nested array".into()));
                };
                let mut mat = Vec::with_capacity(rows.len());
                for row in rows {
                    let toml::Value::Array(items) = row else {
                        return Err(invalid("expected a 3-level nested array".into()));
                    };
                    let mut r = Vec::with_capacity(items.len());
                    for item in items {
                        match item {
                            toml::Value::Float(f) => r.push(f),
                            toml::Value::Integer(i) => r.push(i as f64),
                            other => return Err(invalid(format!("expected numbers, got {other}"))),
                        }
                    }
                    mat.push(r);
                }
                out.push(mat);
            }
            Ok(Some(out))
        }
        Some(other) => Err(invalid(format!("expected an array, got {other}"))),
    }
}

/// Parse a configuration document (TOML with the sections `model`, `domain`,
/// `kernel`, `initial`, and optional `solver`). Unknown keys are errors;
/// omitted solver keys take their defaults.
pub fn parse_config(text: &str) -> Result<(ProblemSpec, SolverConfig), ConfigError> {
    let root: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    parse_config_table(&root, &[])
}

/// Like [`parse_config`] but tolerating the extra top-level sections named in
/// `allow` (used by sweep files).
pub(crate) fn parse_config_table(
    root: &toml::Table,
    allow: &[&str],
) -> Result<(ProblemSpec, SolverConfig), ConfigError> {
    let known = ["model", "domain", "kernel", "initial", "solver"];
    for k in root.keys() {
        if !known.contains(&k.as_str()) && !allow.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
    }
    let section = |name: &'static str| -> Result<Section<'static>, ConfigError> {
        match root.get(name) {
            Some(toml::Value::Table(t)) => Ok(Section::new(name, t.clone())),
            Some(_) => Err(ConfigError::Invalid {
                key: name.into(),
                message: "expected a table section".into(),
            }),
            None => Err(ConfigError::MissingKey(name.into())),
        }
    };

    // [model]
    let mut model = section("model")?;
    let a = model.require_float("a")?;
    let b = model.require_float("b")?;
    let p = model.require_float("p")?;
    let q = model.require_float("q")?;
    let m = model.require_float("m")?;
    let l = model.require_float("l")?;
    let extensions = model.boolean("extensions")?.unwrap_or(false);
    model.finish()?;

    // [domain]
    let mut dom = section("domain")?;
    let kind = dom.require_string("kind")?;
    let domain = match kind.as_str() {
        "interval" => {
            let length = dom.require_float("L")?;
            DomainSpec::Interval { length }
        }
        "rectangle" => {
            let lx = dom.require_float("Lx")?;
            let ly = dom.require_float("Ly")?;
            DomainSpec::Rectangle { lx, ly }
        }
        other => {
            return Err(ConfigError::Invalid {
                key: "domain.kind".into(),
                message: format!("must be `interval` or `rectangle`, got `{other}`"),
            })
        }
    };
    dom.finish()?;

    // [kernel]
    let mut ker = section("kernel")?;
    let kind = ker.require_string("kind")?;
    let kernel = match kind.as_str() {
        "zero" => KernelSpec::Zero,
        "constant" => {
            let kappa = ker.require_float("kappa")?;
            KernelSpec::Constant { kappa }
        }
        "separable" => KernelSpec::Separable {
            g: AffineProfile {
                c0: ker.require_float("g0")?,
                cx: ker.float("gx")?.unwrap_or(0.0),
                cy: ker.float("gy")?.unwrap_or(0.0),
            },
            h: AffineProfile {
                c0: ker.require_float("h0")?,
                cx: ker.float("hx")?.unwrap_or(0.0),
                cy: ker.float("hy")?.unwrap_or(0.0),
            },
            tau: AffineTime {
                c0: ker.float("tau0")?.unwrap_or(1.0),
                ct: ker.float("tau_t")?.unwrap_or(0.0),
            },
        },
        "tabulated" => {
            let times = ker
                .float_array("times")?
                .ok_or_else(|| ConfigError::MissingKey("kernel.times".into()))?;
            let values = nested_float_array_3(&mut ker, "values")?
                .ok_or_else(|| ConfigError::MissingKey("kernel.values".into()))?;
            KernelSpec::Tabulated { times, values }
        }
        other => {
            return Err(ConfigError::Invalid {
                key: "kernel.kind".into(),
                message: format!(
                    "must be one of `zero`, `constant`, `separable`, `tabulated`, got `{other}`"
                ),
            })
        }
    };
    ker.finish()?;

    // [initial]
    let mut ini = section("initial")?;
    let kind = ini.require_string("kind")?;
    let initial = match kind.as_str() {
        "constant" => InitialSpec::Constant { value: ini.require_float("A")? },
        "bump" => {
            let amplitude = ini.require_float("amplitude")?;
            let width = ini.require_float("width")?;
            let baseline = ini.float("baseline")?.unwrap_or(0.0);
            let cx = ini.require_float("center_x")?;
            let cy = match domain {
                DomainSpec::Interval { .. } => {
                    if ini.table.contains_key("center_y") {
                        return Err(ConfigError::Invalid {
                            key: "initial.center_y".into(),
                            message: "only valid on a rectangle domain".into(),
                        });
                    }
                    0.0
                }
                DomainSpec::Rectangle { .. } => ini.require_float("center_y")?,
            };
            InitialSpec::Bump {
                amplitude,
                center: [cx, cy],
                width,
                baseline,
            }
        }
        "tabulated" => {
            let values = ini
                .float_array("values")?
                .ok_or_else(|| ConfigError::MissingKey("initial.values".into()))?;
            InitialSpec::Tabulated { values }
        }
        other => {
            return Err(ConfigError::Invalid {
                key: "initial.kind".into(),
                message: format!(
                    "must be one of `constant`, `bump`, `tabulated`, got `{other}`"
                ),
            })
        }
    };
    ini.finish()?;

    // [solver] — optional, defaults otherwise
    let mut solver = SolverConfig::default();
    if root.contains_key("solver") {
        let mut sol = section("solver")?;
        if let Some(n) = sol.integer("n")? {
            solver.n = n.max(0) as usize;
        }
        if let Some(v) = sol.float("cfl_safety")? {
            solver.cfl_safety = v;
        }
        if let Some(v) = sol.float("reaction_safety")? {
            solver.reaction_safety = v;
        }
        if let Some(v) = sol.float("t_end")? {
            solver.t_end = v;
        }
        if let Some(v) = sol.float("u_max")? {
            solver.u_max = v;
        }
        if let Some(v) = sol.float("dt_min")? {
            solver.dt_min = v;
        }
        if let Some(v) = sol.integer("record_stride")? {
            solver.record_stride = v.max(0) as usize;
        }
        if let Some(v) = sol.float("record_dt")? {
            solver.record_dt = Some(v);
        }
        if let Some(v) = sol.integer("max_steps")? {
            solver.max_steps = v.max(0) as u64;
        }
        if let Some(v) = sol.boolean("store_snapshots")? {
            solver.store_snapshots = v;
        }
        if let Some(s) = sol.string("scheme")? {
            solver.scheme = match s.as_str() {
                "euler" => Scheme::Euler,
                "rk4" => Scheme::Rk4,
                other => {
                    return Err(ConfigError::Invalid {
                        key: "solver.scheme".into(),
                        message: format!("must be `euler` or `rk4`, got `{other}`"),
                    })
                }
            };
        }
        sol.finish()?;
    }

    let problem = ProblemSpec {
        a,
        b,
        p,
        q,
        m,
        l,
        domain,
        kernel,
        initial,
        forcing: None,
        extensions,
    };
    problem.validate()?;
    solver.validate()?;

    // Separable time profiles must stay nonnegative over the run horizon;
    // affine means checking both endpoints is exact.
    if let KernelSpec::Separable { tau, .. } = &problem.kernel {
        if tau.eval(solver.t_end) < 0.0 {
            return Err(ConfigError::Invalid {
                key: "kernel.tau_t".into(),
                message: format!("time profile goes negative before t_end = {}", solver.t_end),
            });
        }
    }

    Ok((problem, solver))
}

fn fmt_float(v: f64) -> String {
    // Debug formatting round-trips and always keeps a float marker
    // (`1.0`, `1e-14`), which TOML needs to not reparse as an integer.
    format!("{v:?}")
}

/// Serialize back to the configuration format; [`parse_config`] of the
/// result reproduces the specs exactly. Fails for specs carrying a forcing
/// hook, which is not config-expressible.
pub fn to_config_string(
    problem: &ProblemSpec,
    solver: &SolverConfig,
) -> Result<String, ConfigError> {
    if problem.forcing.is_some() {
        return Err(ConfigError::Invalid {
            key: "model".into(),
            message: "forcing hooks cannot be expressed in a config document".into(),
        });
    }
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[model]");
    for (k, v) in [
        ("a", problem.a),
        ("b", problem.b),
        ("p", problem.p),
        ("q", problem.q),
        ("m", problem.m),
        ("l", problem.l),
    ] {
        let _ = writeln!(w, "{k} = {}", fmt_float(v));
    }
    if problem.extensions {
        let _ = writeln!(w, "extensions = true");
    }

    let _ = writeln!(w, "\n[domain]");
    match problem.domain {
        DomainSpec::Interval { length } => {
            let _ = writeln!(w, "kind = \"interval\"");
            let _ = writeln!(w, "L = {}", fmt_float(length));
        }
        DomainSpec::Rectangle { lx, ly } => {
            let _ = writeln!(w, "kind = \"rectangle\"");
            let _ = writeln!(w, "Lx = {}", fmt_float(lx));
            let _ = writeln!(w, "Ly = {}", fmt_float(ly));
        }
    }

    let _ = writeln!(w, "\n[kernel]");
    match &problem.kernel {
        KernelSpec::Zero => {
            let _ = writeln!(w, "kind = \"zero\"");
        }
        KernelSpec::Constant { kappa } => {
            let _ = writeln!(w, "kind = \"constant\"");
            let _ = writeln!(w, "kappa = {}", fmt_float(*kappa));
        }
        KernelSpec::Separable { g, h, tau } => {
            let _ = writeln!(w, "kind = \"separable\"");
            for (k, v) in [
                ("g0", g.c0),
                ("gx", g.cx),
                ("gy", g.cy),
                ("h0", h.c0),
                ("hx", h.cx),
                ("hy", h.cy),
                ("tau0", tau.c0),
                ("tau_t", tau.ct),
            ] {
                let _ = writeln!(w, "{k} = {}", fmt_float(v));
            }
        }
        KernelSpec::Tabulated { times, values } => {
            let _ = writeln!(w, "kind = \"tabulated\"");
            let list: Vec<String> = times.iter().map(|t| fmt_float(*t)).collect();
            let _ = writeln!(w, "times = [{}]", list.join(", "));
            let slices: Vec<String> = values
                .iter()
                .map(|slice| {
                    let rows: Vec<String> = slice
                        .iter()
                        .map(|row| {
                            let items: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
                            format!("[{}]", items.join(", "))
                        })
                        .collect();
                    format!("[{}]", rows.join(", "))
                })
                .collect();
            let _ = writeln!(w, "values = [{}]", slices.join(", "));
        }
    }

    let _ = writeln!(w, "\n[initial]");
    match &problem.initial {
        InitialSpec::Constant { value } => {
            let _ = writeln!(w, "kind = \"constant\"");
            let _ = writeln!(w, "A = {}", fmt_float(*value));
        }
        InitialSpec::Bump {
            amplitude,
            center,
            width,
            baseline,
        } => {
            let _ = writeln!(w, "kind = \"bump\"");
            let _ = writeln!(w, "amplitude = {}", fmt_float(*amplitude));
            let _ = writeln!(w, "width = {}", fmt_float(*width));
            let _ = writeln!(w, "baseline = {}", fmt_float(*baseline));
            let _ = writeln!(w, "center_x = {}", fmt_float(center[0]));
            if problem.domain.dim() == 2 {
                let _ = writeln!(w, "center_y = {}", fmt_float(center[1]));
            }
        }
        InitialSpec::Tabulated { values } => {
            let _ = writeln!(w, "kind = \"tabulated\"");
            let list: Vec<String> = values.iter().map(|v| fmt_float(*v)).collect();
            let _ = writeln!(w, "values = [{}]", list.join(", "));
        }
    }

    let _ = writeln!(w, "\n[solver]");
    let _ = writeln!(w, "n = {}", solver.n);
    let _ = writeln!(w, "cfl_safety = {}", fmt_float(solver.cfl_safety));
    let _ = writeln!(w, "reaction_safety = {}", fmt_float(solver.reaction_safety));
    let _ = writeln!(w, "t_end = {}", fmt_float(solver.t_end));
    let _ = writeln!(w, "u_max = {}", fmt_float(solver.u_max));
    let _ = writeln!(w, "dt_min = {}", fmt_float(solver.dt_min));
    let _ = writeln!(w, "record_stride = {}", solver.record_stride);
    if let Some(rdt) = solver.record_dt {
        let _ = writeln!(w, "record_dt = {}", fmt_float(rdt));
    }
    let _ = writeln!(w, "max_steps = {}", solver.max_steps);
    let _ = writeln!(w, "store_snapshots = {}", solver.store_snapshots);
    let _ = writeln!(
        w,
        "scheme = \"{}\"",
        match solver.scheme {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        }
    );
    Ok(out)
}

/// Max over boundary nodes of |discrete ∂u0/∂ν − ∫_Ω k(x,·,0)·u0^l dy|:
/// how far the initial data sit from the discrete compatibility condition.
/// Reported, not enforced; runs proceed with a warning when it is large.
pub fn compatibility_residual(problem: &ProblemSpec, grid: &Grid) -> Result<f64, crate::rhs::RhsError> {
    let ctx = crate::rhs::RhsContext::new(problem.clone(), grid.clone())?;
    let u0 = problem
        .initial
        .realize(grid)
        .map_err(|e| crate::rhs::RhsError::Config(e.to_string()))?;
    crate::rhs::compatibility_residual_impl(&ctx, &u0)
}
