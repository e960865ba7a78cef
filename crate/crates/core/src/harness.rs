//! Scene files, on-shell jet projection and report generation.
//!
//! A scene is a JSON document naming one of four pipelines (`pde`,
//! `master`, `projective`, `para-kahler`), its defining expressions, a sample
//! plan and tolerances. [`run_scene`] draws the sample points, evaluates the
//! pipeline at each of them (in parallel, ordered by point index) and turns the
//! per-point numbers into pass/fail checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{frobenius_residual, w_quartic, DLp};
use crate::error::{Error, Result};
use crate::expr::{parse, Environment, Expr, Tape, VariableTable};
use crate::geometry::{digit_jet_name, multi_indices, Chart, VectorFieldL};
use crate::lifts::{
    contact_delta, contactify, projective_lift, thomas_from_christoffel, ChristoffelData, ParaKahlerScene,
    ProjectiveStructure, LIFT,
};
use crate::linalg;
use crate::master::{self, MasterScene, PreparedScene, SymbolSystem};
use crate::random::{self, SceneRng};
use crate::symbol::{contactness_of_form, delta_invariant, linearization_symbol, subconformal_data, PdeProblem, SceneJets};

pub const TOOL: &str = "subcurv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON schema of scene files.
pub const SCENE_SCHEMA: &str = include_str!("../schema/scene.schema.json");

/// Scenes shipped with the crate, by file name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("heavenly.scene", include_str!("../scenes/heavenly.scene")),
    ("fk.scene", include_str!("../scenes/fk.scene")),
    ("flat-master.scene", include_str!("../scenes/flat-master.scene")),
    ("projective-random.scene", include_str!("../scenes/projective-random.scene")),
    ("flat-para-kahler.scene", include_str!("../scenes/flat-para-kahler.scene")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name || n.strip_suffix(".scene") == Some(name))
        .map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    Pde,
    Master,
    Projective,
    ParaKahler,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Pde => "pde",
            SceneKind::Master => "master",
            SceneKind::Projective => "projective",
            SceneKind::ParaKahler => "para-kahler",
        }
    }
}

/// An expression, a list of expressions, or a matrix of expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Expr(String),
    List(Vec<String>),
    Matrix(Vec<Vec<String>>),
}

fn default_box() -> Vec<[f64; 2]> {
    vec![[-1.0, 1.0]; 5]
}
fn default_count() -> usize {
    25
}
fn default_redraws() -> usize {
    50
}
fn default_thetas() -> usize {
    20
}
fn default_lambdas() -> Vec<f64> {
    vec![-2.0, -0.5, 0.3, 1.0, 1.7]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePlan {
    #[serde(rename = "box", default = "default_box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_count")]
    pub count: usize,
    pub seed: u64,
    /// Redraws per point when a point is unusable (principal derivative not
    /// solvable, `v` vanishing).
    #[serde(default = "default_redraws")]
    pub redraws: usize,
    /// Random covectors per point for the master symbol check.
    #[serde(default = "default_thetas")]
    pub thetas: usize,
    /// Half-width of the interval jet values are drawn from.
    #[serde(default = "one")]
    pub jet_range: f64,
}

fn one() -> f64 {
    1.0
}

macro_rules! tolerances {
    ($($name:ident = $v:expr),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct Tolerances {
            $(pub $name: f64,)*
        }
        impl Default for Tolerances {
            fn default() -> Self {
                Tolerances { $($name: $v,)* }
            }
        }
    };
}

tolerances! {
    projection = 1e-10,
    solvable = 1e-8,
    contact = 1e-8,
    frobenius = 1e-9,
    offshell = 1e-3,
    offshell_fraction = 0.9,
    delta_routes = 1e-9,
    curvature = 1e-8,
    trace = 1e-10,
    coframe = 1e-9,
    identity = 1e-9,
    cross = 1e-6,
    det_spread = 1e-6,
    residual = 1e-9,
    primitive = 1e-10,
}

/// Claims a scene makes about itself, checked in addition to the built-in
/// consistency checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// δ at every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<i8>,
    /// Compatibility of Ω with a family of null planes at every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compatible: Option<bool>,
    /// Master scene solves the master system (all residuals vanish).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldValue>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub sample: SamplePlan,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub expect: Expectations,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SceneConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sample.bounds.len() != 5 {
            return bad(format!("sample box needs 5 intervals, got {}", self.sample.bounds.len()));
        }
        if let Some([lo, hi]) = self.sample.bounds.iter().find(|[lo, hi]| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return bad(format!("empty or non-finite sample interval [{lo}, {hi}]"));
        }
        if self.sample.count == 0 {
            return bad("sample count must be positive".into());
        }
        if self.lambdas.is_empty() {
            return bad("at least one λ sample is needed".into());
        }
        if self.params.values().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if let Some(d) = self.expect.delta {
            if d != 1 && d != -1 {
                return bad(format!("expected δ must be ±1, got {d}"));
            }
        }
        Ok(())
    }

    fn field(&self, name: &str) -> Result<&FieldValue> {
        self.fields
            .get(name)
            .ok_or_else(|| Error::Config(format!("{} scene needs field `{name}`", self.kind.name())))
    }

    fn expr_field(&self, name: &str) -> Result<&str> {
        match self.field(name)? {
            FieldValue::Expr(s) => Ok(s),
            _ => Err(Error::Config(format!("field `{name}` must be a single expression"))),
        }
    }

    fn list_field(&self, name: &str, len: usize) -> Result<&[String]> {
        match self.field(name)? {
            FieldValue::List(v) if v.len() == len => Ok(v),
            _ => Err(Error::Config(format!("field `{name}` must be a list of {len} expressions"))),
        }
    }

    fn matrix_field(&self, name: &str, rows: usize, cols: usize) -> Result<&[Vec<String>]> {
        match self.field(name)? {
            FieldValue::Matrix(m) if m.len() == rows && m.iter().all(|r| r.len() == cols) => Ok(m),
            _ => Err(Error::Config(format!("field `{name}` must be a {rows}×{cols} matrix of expressions"))),
        }
    }

    fn param_pairs(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    fn table_with_params(&self, mut t: VariableTable) -> Result<VariableTable> {
        for name in self.params.keys() {
            t.push(name)?;
        }
        Ok(t)
    }

    fn parse_with(&self, text: &str, t: &VariableTable) -> Result<Expr> {
        Ok(parse(text, t)?.substitute_values(&self.param_pairs()))
    }

    fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }
}

// ---------------------------------------------------------------------------
// jet projection

/// A jet to order three at a point, satisfying `F = 0` and `D_iF = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedJet {
    pub point: [f64; 5],
    pub jets: Environment,
    /// `max(|F|, |D₁F|, …, |D₅F|)` after projection.
    pub residual: f64,
}

/// Names `x1..x5`, `u` and all jets of `u` to order three.
pub fn jet_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=5).map(|i| format!("x{i}")).collect();
    names.push("u".into());
    names.extend(multi_indices(5, 3).iter().map(|idx| digit_jet_name("u", idx)));
    names
}

const NEWTON_STEPS: usize = 20;

/// Solves `F = 0` for the principal derivative and `D_iF = 0` for its five
/// prolongations at a single jet.
#[derive(Debug, Clone)]
pub struct JetProjector {
    principal: String,
    prolonged: [String; 5],
    names: Vec<String>,
    /// `F`, `∂F/∂principal`.
    f: Tape,
    /// `D₁F … D₅F` followed by `∂(D_kF)/∂(prolonged_i)` row-major.
    total: Tape,
}

impl JetProjector {
    pub fn new(p: &PdeProblem) -> Result<Self> {
        let chart = p.chart();
        let (field, idx) = chart
            .parse_jet(p.principal())
            .ok_or_else(|| Error::Config(format!("`{}` is not a jet variable", p.principal())))?;
        let prolonged: [String; 5] = std::array::from_fn(|i| {
            let mut k = idx.clone();
            k.push(i);
            chart.jet_name(&field, &k).expect("chart with jets")
        });
        let names = jet_names();
        let inputs: Vec<&str> = names.iter().map(String::as_str).collect();
        let fx = p.f().clone();
        let f = Tape::compile(&[fx.clone(), fx.diff(p.principal())], &inputs)?;
        let d: Vec<Expr> = (0..5).map(|i| chart.derivative(&fx, i)).collect();
        let mut exprs = d.clone();
        for dk in &d {
            for v in &prolonged {
                exprs.push(dk.diff(v));
            }
        }
        let total = Tape::compile(&exprs, &inputs)?;
        Ok(JetProjector {
            principal: p.principal().to_string(),
            prolonged,
            names,
            f,
            total,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn values(&self, env: &Environment) -> Result<Vec<f64>> {
        self.names.iter().map(|n| env.require(n)).collect()
    }

    /// Project `raw` (coordinates and all jets to order three) onto the
    /// constraint set; `solvable` is the smallest admissible pivot.
    pub fn project(&self, raw: &Environment, tol: f64, solvable: f64) -> Result<ConstrainedJet> {
        let mut vals = self.values(raw)?;
        let pi = self.index(&self.principal);
        let mut steps = 0;
        loop {
            let r = self.f.eval(&vals)?;
            if r[0].abs() <= tol {
                break;
            }
            if !(r[1].abs() > solvable) {
                return Err(Error::NotSolvable {
                    var: self.principal.clone(),
                    derivative: r[1],
                });
            }
            if steps == NEWTON_STEPS {
                return Err(Error::NewtonDiverged {
                    iterations: steps,
                    residual: r[0].abs(),
                });
            }
            vals[pi] -= r[0] / r[1];
            steps += 1;
        }
        let slots: Vec<usize> = self.prolonged.iter().map(|n| self.index(n)).collect();
        let mut steps = 0;
        let residual = loop {
            let out = self.total.eval(&vals)?;
            let worst = out[..5].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if worst <= tol {
                break worst;
            }
            if steps == NEWTON_STEPS {
                return Err(Error::NewtonDiverged {
                    iterations: steps,
                    residual: worst,
                });
            }
            let a = DMatrix::from_fn(5, 5, |k, i| out[5 + 5 * k + i]);
            let sv = linalg::singular_values(&a);
            if !(sv[4] > solvable) {
                return Err(Error::NotSolvable {
                    var: self.prolonged.join(","),
                    derivative: sv[4],
                });
            }
            let b = DVector::from_fn(5, |k, _| -out[k]);
            let dy = linalg::solve(&a, &b).ok_or(Error::NotSolvable {
                var: self.prolonged.join(","),
                derivative: sv[4],
            })?;
            for (s, d) in slots.iter().zip(dy.iter()) {
                vals[*s] += d;
            }
            steps += 1;
        };
        let f = self.f.eval(&vals)?[0].abs();
        let mut jets = Environment::new();
        for (n, v) in self.names.iter().zip(&vals) {
            jets.set(n, *v);
        }
        Ok(ConstrainedJet {
            point: std::array::from_fn(|i| vals[i]),
            jets,
            residual: residual.max(f),
        })
    }

    fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("jet name in table")
    }
}

/// [`JetProjector::project`] for a one-off projection at tolerance 1e-10.
pub fn jet_project(p: &PdeProblem, raw: &Environment) -> Result<ConstrainedJet> {
    JetProjector::new(p)?.project(raw, 1e-10, 1e-8)
}

/// Uniform coordinates in `bounds` and jet values in `[-range, range]`.
pub fn random_jet(rng: &mut SceneRng, names: &[String], bounds: &[[f64; 2]], range: f64) -> Environment {
    let mut env = Environment::new();
    for (i, n) in names.iter().enumerate() {
        let v = if i < 5 {
            random::uniform(rng, bounds[i][0], bounds[i][1])
        } else {
            random::uniform(rng, -range, range)
        };
        env.set(n, v);
    }
    env
}

// ---------------------------------------------------------------------------
// reports

/// Numbers recorded at one sample point; absent entries were not computed
/// for this scene kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<usize>,
    pub coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redraws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_routes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compatible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offshell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<[f64; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_scaled: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coframe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One pass/fail line: the worst value over the points, where it was
/// attained and the bound it was compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// `"max ≤"`, `"min >"`, `"fraction ≥"`, or a count of bad points
    /// (`"failing ="`, `"erroring ="`) that must be zero.
    pub relation: String,
    pub tolerance: f64,
    pub worst: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<usize>,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: SceneConfig,
    pub points: Vec<PointRecord>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}: {} scene, seed {}", self.tool, self.version, self.config.kind.name(), self.config.sample.seed);
        if let Some(d) = &self.config.description {
            let _ = writeln!(s, "{d}");
        }
        let _ = writeln!(s, "{} points", self.points.len());
        for c in &self.checks {
            let at = c.at.map(|i| format!(" at point {i}")).unwrap_or_default();
            let value = if c.relation.ends_with('=') {
                format!("{} of {} points", c.worst, c.samples)
            } else {
                format!("{:.3e} ({} {:.1e}, {} samples)", c.worst, c.relation, c.tolerance, c.samples)
            };
            let _ = writeln!(s, "  {} {:<28} {value}{at}", if c.passed { "PASS" } else { "FAIL" }, c.name);
        }
        let errors: Vec<&PointRecord> = self.points.iter().filter(|p| p.error.is_some()).collect();
        for p in errors.iter().take(10) {
            let _ = writeln!(s, "  point {}: {}", p.index, p.error.as_deref().unwrap_or_default());
        }
        if errors.len() > 10 {
            let _ = writeln!(s, "  … {} more point errors", errors.len() - 10);
        }
        let _ = writeln!(s, "{}", if self.passed { "all checks passed" } else { "some checks failed" });
        s
    }
}

fn max_check(name: &str, tol: f64, pts: &[PointRecord], get: impl Fn(&PointRecord) -> Option<f64>) -> CheckOutcome {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    let mut n = 0;
    let mut nan = false;
    for p in pts {
        if let Some(v) = get(p) {
            n += 1;
            nan |= v.is_nan();
            if v > worst {
                worst = v;
                at = Some(p.index);
            }
        }
    }
    CheckOutcome {
        name: name.into(),
        relation: "max ≤".into(),
        tolerance: tol,
        worst: if n == 0 { f64::NAN } else { worst },
        at,
        samples: n,
        passed: n > 0 && !nan && worst <= tol,
    }
}

fn min_check(name: &str, tol: f64, pts: &[PointRecord], get: impl Fn(&PointRecord) -> Option<f64>) -> CheckOutcome {
    let mut c = max_check(name, -tol, pts, |p| get(p).map(|v| -v));
    c.worst = -c.worst;
    c.tolerance = tol;
    c.relation = "min >".into();
    c.passed = c.samples > 0 && c.worst > tol;
    c
}

fn all_check(name: &str, pts: &[PointRecord], ok: impl Fn(&PointRecord) -> Option<bool>) -> CheckOutcome {
    let vals: Vec<(usize, bool)> = pts.iter().filter_map(|p| ok(p).map(|b| (p.index, b))).collect();
    let bad = vals.iter().filter(|(_, b)| !b).count();
    CheckOutcome {
        name: name.into(),
        relation: "failing =".into(),
        tolerance: 0.0,
        worst: bad as f64,
        at: vals.iter().find(|(_, b)| !b).map(|(i, _)| *i),
        samples: vals.len(),
        passed: !vals.is_empty() && bad == 0,
    }
}

fn errors_check(pts: &[PointRecord]) -> CheckOutcome {
    let bad = pts.iter().filter(|p| p.error.is_some()).count();
    CheckOutcome {
        name: "point errors".into(),
        relation: "erroring =".into(),
        tolerance: 0.0,
        worst: bad as f64,
        at: pts.iter().find(|p| p.error.is_some()).map(|p| p.index),
        samples: pts.len(),
        passed: bad == 0,
    }
}

// ---------------------------------------------------------------------------
// running scenes

/// Which part of a pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    /// Only the Lax-pair checks (on-shell Frobenius, off-shell
    /// discrimination, or the master residual identity).
    LaxOnly,
}

/// Rayon pool honouring `SUBCURV_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SUBCURV_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("SUBCURV_THREADS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

pub fn run_scene(cfg: &SceneConfig) -> Result<Report> {
    run_scene_mode(cfg, Mode::Full)
}

pub fn run_scene_mode(cfg: &SceneConfig, mode: Mode) -> Result<Report> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let (points, checks) = pool.install(|| match cfg.kind {
        SceneKind::Pde => run_pde(cfg, mode),
        SceneKind::Master => run_master(cfg, mode),
        SceneKind::Projective => run_projective(cfg),
        SceneKind::ParaKahler => run_para_kahler(cfg),
    })?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: cfg.clone(),
        points,
        checks,
        passed,
    })
}

fn point_seeds(cfg: &SceneConfig, n: usize) -> Vec<u64> {
    let mut rng = random::rng(cfg.sample.seed);
    (0..n).map(|_| rng.random()).collect()
}

fn draw_point(rng: &mut SceneRng, bounds: &[[f64; 2]]) -> [f64; 5] {
    std::array::from_fn(|i| random::uniform(rng, bounds[i][0], bounds[i][1]))
}

fn env_of(names: &[&str], p: &[f64; 5]) -> Environment {
    let mut e = Environment::new();
    for (n, v) in names.iter().zip(p) {
        e.set(n, *v);
    }
    e
}

fn record_error(rec: &mut PointRecord, r: Result<()>) {
    if let Err(e) = r {
        rec.error = Some(e.to_string());
    }
}

type Outcome = (Vec<PointRecord>, Vec<CheckOutcome>);

/// Lax pair of a PDE scene: `lax` is two rows of five components over
/// `x1..x5`, jets to order two, `lambda` and the scene parameters.
fn scene_lax(cfg: &SceneConfig) -> Result<Option<DLp>> {
    if !cfg.fields.contains_key("lax") {
        return Ok(None);
    }
    let rows = cfg.matrix_field("lax", 2, 5)?;
    let t = cfg.table_with_params(VariableTable::standard_jets(2))?;
    let field = |row: &[String]| -> Result<VectorFieldL> {
        let comps: Vec<Expr> = row.iter().map(|s| cfg.parse_with(s, &t)).collect::<Result<_>>()?;
        let comps: [Expr; 5] = comps.try_into().expect("five components");
        VectorFieldL::from_lambda_exprs(comps)
    };
    let chart = Chart::standard_jets();
    Ok(Some(DLp::new(field(&rows[0])?, field(&rows[1])?, &chart)?))
}

fn run_pde(cfg: &SceneConfig, mode: Mode) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let f = cfg.expr_field("F")?;
    let principal = cfg.expr_field("principal")?;
    let problem = PdeProblem::parse(f, principal, &cfg.param_pairs())?;
    let lax = scene_lax(cfg)?;
    if mode == Mode::LaxOnly && lax.is_none() {
        return Err(Error::Config("lax-check needs a `lax` field".into()));
    }
    // an explicit solution replaces projection
    let explicit = match cfg.fields.get("u") {
        Some(_) => Some(SceneJets::parse(cfg.expr_field("u")?, 3)?),
        None => None,
    };
    let projector = JetProjector::new(&problem)?;
    let names = projector.names().to_vec();
    let f_tape = Tape::compile(&[problem.f().clone()], &names.iter().map(String::as_str).collect::<Vec<_>>())?;
    let seeds = point_seeds(cfg, cfg.sample.count);
    let points: Vec<PointRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let mut rng = SceneRng::seed_from_u64(*seed);
            let mut rec = PointRecord {
                index,
                ..Default::default()
            };
            let r = (|| -> Result<()> {
                let (env, raw) = match &explicit {
                    Some(sj) => {
                        let p = draw_point(&mut rng, &cfg.sample.bounds);
                        let env = sj.jets_at(&p)?;
                        rec.projection = Some(f_tape.eval_env(&env)?[0].abs());
                        (env, None)
                    }
                    None => {
                        let mut tries = 0;
                        loop {
                            let raw = random_jet(&mut rng, &names, &cfg.sample.bounds, cfg.sample.jet_range);
                            match projector.project(&raw, tol.projection, tol.solvable) {
                                Ok(cj) => {
                                    rec.projection = Some(cj.residual);
                                    rec.redraws = Some(tries);
                                    break (cj.jets, Some(raw));
                                }
                                Err(Error::NotSolvable { .. }) if tries < cfg.sample.redraws => tries += 1,
                                Err(e) => return Err(e),
                            }
                        }
                    }
                };
                rec.coords = (1..=5).map(|i| env.get(&format!("x{i}")).unwrap_or(f64::NAN)).collect();
                if let Some(d) = &lax {
                    rec.frobenius = Some(frobenius_residual(d, &env, &cfg.lambdas)?.max_defect());
                    if let Some(raw) = &raw {
                        // a dependent pair off-shell counts as no discrimination
                        rec.offshell = Some(frobenius_residual(d, raw, &cfg.lambdas).map(|r| r.max_defect()).unwrap_or(0.0));
                    }
                }
                if mode == Mode::LaxOnly {
                    return Ok(());
                }
                rec.rank = Some(linearization_symbol(&problem, &env)?.rank);
                let sd = subconformal_data(&problem, &env)?;
                rec.contact = Some(sd.contact.contactness().abs());
                let d = delta_invariant(&sd.g, &sd.omega)?;
                rec.delta = Some(d.sign);
                rec.delta_value = Some(d.value);
                rec.delta_routes = Some(d.route_disagreement);
                rec.compatible = Some(d.family.is_some());
                Ok(())
            })();
            record_error(&mut rec, r);
            rec
        })
        .collect();

    let mut checks = vec![errors_check(&points)];
    if explicit.is_some() {
        checks.push(max_check("F on the solution", tol.residual, &points, |p| p.projection));
    } else {
        checks.push(max_check("projection residual", tol.projection, &points, |p| p.projection));
    }
    if lax.is_some() {
        checks.push(max_check("frobenius on-shell", tol.frobenius, &points, |p| p.frobenius));
        if explicit.is_none() {
            let vals: Vec<&PointRecord> = points.iter().filter(|p| p.offshell.is_some()).collect();
            let hit = vals.iter().filter(|p| p.offshell.unwrap() > tol.offshell).count();
            let frac = if vals.is_empty() { 0.0 } else { hit as f64 / vals.len() as f64 };
            checks.push(CheckOutcome {
                name: format!("off-shell defect > {:.0e}", tol.offshell),
                relation: "fraction ≥".into(),
                tolerance: tol.offshell_fraction,
                worst: frac,
                at: vals.iter().find(|p| p.offshell.unwrap() <= tol.offshell).map(|p| p.index),
                samples: vals.len(),
                passed: !vals.is_empty() && frac >= tol.offshell_fraction,
            });
        }
    }
    if mode == Mode::Full {
        checks.push(all_check("symbol rank 4", &points, |p| p.rank.map(|r| r == 4)));
        checks.push(min_check("contactness", tol.contact, &points, |p| p.contact));
        checks.push(max_check("δ route agreement", tol.delta_routes, &points, |p| p.delta_routes));
        if let Some(d) = cfg.expect.delta {
            checks.push(all_check(&format!("δ = {d:+}"), &points, |p| p.delta.map(|s| s == d)));
        }
        if let Some(c) = cfg.expect.compatible {
            checks.push(all_check("compatibility", &points, |p| p.compatible.map(|b| b == c)));
        }
    }
    Ok((points, checks))
}

fn master_scene(cfg: &SceneConfig) -> Result<MasterScene> {
    let t = cfg.table_with_params(VariableTable::new(master::COORDS)?)?;
    let get = |n: &str| -> Result<Expr> { cfg.parse_with(cfg.expr_field(n)?, &t) };
    Ok(MasterScene {
        u: get("u")?,
        v: get("v")?,
        w: get("w")?,
        z: get("z")?,
    })
}

fn run_master(cfg: &SceneConfig, mode: Mode) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let prepared = PreparedScene::new(master_scene(cfg)?)?;
    let system = if mode == Mode::Full { Some(SymbolSystem::new()?) } else { None };
    let seeds = point_seeds(cfg, cfg.sample.count);
    let points: Vec<PointRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let mut rng = SceneRng::seed_from_u64(*seed);
            let mut rec = PointRecord {
                index,
                ..Default::default()
            };
            let r = (|| -> Result<()> {
                let mut tries = 0;
                let env = loop {
                    let p = draw_point(&mut rng, &cfg.sample.bounds);
                    let env = env_of(&master::COORDS, &p);
                    match prepared.scene.check_v(&env) {
                        Ok(v) => {
                            rec.v = Some(v);
                            rec.coords = p.to_vec();
                            rec.redraws = Some(tries);
                            break env;
                        }
                        Err(Error::VanishingV { .. }) if tries < cfg.sample.redraws => tries += 1,
                        Err(e) => return Err(e),
                    }
                };
                let cmp = prepared.residuals_vs_frobenius(&env)?;
                rec.residuals = Some(cmp.residuals);
                rec.identity = Some(cmp.relative());
                rec.w4 = Some(cmp.interpolated[4].abs() / cmp.scale);
                if mode == Mode::LaxOnly {
                    return Ok(());
                }
                rec.coframe = Some(master::coframe_check(&prepared.scene, &env)?);
                rec.cross = Some(prepared.cross_check(&env)?.distance);
                if let Some(system) = &system {
                    let mut thetas = Vec::with_capacity(cfg.sample.thetas);
                    let mut spread = None;
                    for _ in 0..=cfg.sample.redraws {
                        thetas.clear();
                        for _ in 0..cfg.sample.thetas {
                            thetas.push(random::point::<5>(&mut rng, -1.0, 1.0));
                        }
                        match master::symbol_determinant_check(system, &prepared.scene, &env, &thetas) {
                            Ok(c) => {
                                spread = Some(c.spread);
                                break;
                            }
                            Err(Error::QNearZero { .. }) => continue,
                            Err(e) => return Err(e),
                        }
                    }
                    rec.det_spread = Some(spread.ok_or(Error::QNearZero { value: 0.0 })?);
                }
                Ok(())
            })();
            record_error(&mut rec, r);
            rec
        })
        .collect();

    let mut checks = vec![errors_check(&points)];
    checks.push(max_check("residual/Frobenius", tol.identity, &points, |p| p.identity));
    checks.push(max_check("W4 = 0", tol.identity, &points, |p| p.w4));
    if mode == Mode::Full {
        checks.push(max_check("coframe normal form", tol.coframe, &points, |p| p.coframe));
        checks.push(max_check("naive/master roots", tol.cross, &points, |p| p.cross));
        checks.push(max_check("det B / Q^4 spread", tol.det_spread, &points, |p| p.det_spread));
    }
    if cfg.expect.solution == Some(true) {
        checks.push(max_check("residuals vanish", tol.residual, &points, |p| {
            p.residuals.map(|r| r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        }));
    }
    Ok((points, checks))
}

/// Explicit Christoffel symbols as fields `G{k}_{ij}` (i ≤ j), or Thomas
/// symbols as `P{k}_{ij}`; otherwise `params.structures` random connections
/// of degree `params.degree`.
fn projective_structures(cfg: &SceneConfig) -> Result<Vec<ProjectiveStructure>> {
    let t = cfg.table_with_params(VariableTable::new(crate::lifts::BASE)?)?;
    let explicit = |prefix: char| -> Result<Option<[[[Expr; 3]; 3]; 3]>> {
        let keys: Vec<&String> = cfg.fields.keys().filter(|k| k.starts_with(prefix)).collect();
        if keys.is_empty() {
            return Ok(None);
        }
        let mut out: [[[Expr; 3]; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero())));
        for key in keys {
            let d: Vec<usize> = key[1..].chars().filter(|c| *c != '_').filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect();
            let valid = d.len() == 3 && d.iter().all(|i| *i < 3) && key.len() == 5 && key.as_bytes()[2] == b'_';
            if !valid {
                return Err(Error::Config(format!("bad connection key `{key}`, expected {prefix}k_ij with indices 0..2")));
            }
            let e = cfg.parse_with(cfg.expr_field(key)?, &t)?;
            out[d[0]][d[1]][d[2]] = e.clone();
            out[d[0]][d[2]][d[1]] = e;
        }
        Ok(Some(out))
    };
    if let Some(g) = explicit('G')? {
        let mut c = ChristoffelData::zero();
        for k in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    c.set(k, i, j, g[k][i][j].clone());
                }
            }
        }
        return Ok(vec![thomas_from_christoffel(&c)]);
    }
    if let Some(p) = explicit('P')? {
        let mut ps = ProjectiveStructure::zero();
        for k in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    ps.set(k, i, j, p[k][i][j].clone());
                }
            }
        }
        return Ok(vec![ps]);
    }
    let n = cfg.param("structures", 1.0);
    let degree = cfg.param("degree", 2.0);
    if n < 1.0 || n.fract() != 0.0 || degree < 0.0 || degree.fract() != 0.0 {
        return Err(Error::Config("params.structures and params.degree must be non-negative integers".into()));
    }
    let mut rng = random::rng(cfg.sample.seed ^ 0x5eed_0f_9a11);
    Ok((0..n as usize).map(|_| ProjectiveStructure::random(&mut rng, degree as usize)).collect())
}

fn run_projective(cfg: &SceneConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let structures = projective_structures(cfg)?;
    let lifts: Vec<_> = structures.iter().map(projective_lift).collect::<Result<_>>()?;
    let count = cfg.sample.count;
    let seeds = point_seeds(cfg, count * structures.len());
    let points: Vec<PointRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let s = index / count;
            let mut rng = SceneRng::seed_from_u64(*seed);
            let p = draw_point(&mut rng, &cfg.sample.bounds);
            let mut rec = PointRecord {
                index,
                structure: Some(s),
                coords: p.to_vec(),
                ..Default::default()
            };
            let r = (|| -> Result<()> {
                let env = env_of(&LIFT, &p);
                rec.trace = Some(structures[s].trace_defect(&env)?);
                let w = w_quartic(&lifts[s].adapted, &env)?;
                rec.w = Some(w.w);
                rec.w_scaled = Some(w.scaled_max());
                Ok(())
            })();
            record_error(&mut rec, r);
            rec
        })
        .collect();
    let checks = vec![
        errors_check(&points),
        max_check("Thomas trace", tol.trace, &points, |p| p.trace),
        max_check("curvature |W| scaled", tol.curvature, &points, |p| p.w_scaled),
    ];
    Ok((points, checks))
}

fn para_kahler_scene(cfg: &SceneConfig) -> Result<ParaKahlerScene> {
    let coords = cfg.list_field("coords", 4)?;
    let mut t = VariableTable::new(coords.iter().map(String::as_str))?;
    if coords.iter().any(|c| c == "t") {
        return Err(Error::Config("`t` is reserved for the contact fibre".into()));
    }
    t.push("t")?;
    let t = cfg.table_with_params(t)?;
    let matrix = |name: &str| -> Result<[[Expr; 4]; 4]> {
        let m = cfg.matrix_field(name, 4, 4)?;
        let mut out: [[Expr; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero()));
        for a in 0..4 {
            for b in 0..4 {
                out[a][b] = cfg.parse_with(&m[a][b], &t)?;
            }
        }
        Ok(out)
    };
    let prim = cfg.list_field("primitive", 4)?;
    let primitive: Vec<Expr> = prim.iter().map(|s| cfg.parse_with(s, &t)).collect::<Result<_>>()?;
    Ok(ParaKahlerScene {
        coords: std::array::from_fn(|i| coords[i].clone()),
        g: matrix("g")?,
        omega: matrix("omega")?,
        primitive: primitive.try_into().expect("four components"),
        coframe: if cfg.fields.contains_key("coframe") { Some(matrix("coframe")?) } else { None },
    })
}

fn run_para_kahler(cfg: &SceneConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let pk = para_kahler_scene(cfg)?;
    let chart = pk.chart();
    let names = chart.coords();
    // validation happens per point below, so that a mismatch is reported
    // where it occurs rather than aborting the run
    let structure = contactify(&pk, &[], tol.primitive)?;
    let seeds = point_seeds(cfg, cfg.sample.count);
    let points: Vec<PointRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let mut rng = SceneRng::seed_from_u64(*seed);
            let p = draw_point(&mut rng, &cfg.sample.bounds);
            let mut rec = PointRecord {
                index,
                coords: p.to_vec(),
                ..Default::default()
            };
            let r = (|| -> Result<()> {
                let env = env_of(&names, &p);
                rec.primitive = Some(pk.primitive_defect(&env)?);
                rec.contact = Some(contactness_of_form(&structure.beta, &chart, &env)?.abs());
                let d = contact_delta(&pk, &env)?;
                rec.delta = Some(d.sign);
                rec.delta_value = Some(d.value);
                rec.delta_routes = Some(d.route_disagreement);
                rec.compatible = Some(d.family.is_some());
                if let Some(a) = &structure.adapted {
                    let w = w_quartic(a, &env)?;
                    rec.w = Some(w.w);
                    rec.w_scaled = Some(w.scaled_max());
                }
                Ok(())
            })();
            record_error(&mut rec, r);
            rec
        })
        .collect();
    let mut checks = vec![
        errors_check(&points),
        max_check("dω̃⁰ = Ω̃", tol.primitive, &points, |p| p.primitive),
        min_check("contactness", tol.contact, &points, |p| p.contact),
        max_check("δ route agreement", tol.delta_routes, &points, |p| p.delta_routes),
    ];
    if pk.coframe.is_some() {
        checks.push(max_check("curvature |W| scaled", tol.curvature, &points, |p| p.w_scaled));
    }
    if let Some(d) = cfg.expect.delta {
        checks.push(all_check(&format!("δ = {d:+}"), &points, |p| p.delta.map(|s| s == d)));
    }
    if let Some(c) = cfg.expect.compatible {
        checks.push(all_check("compatibility", &points, |p| p.compatible.map(|b| b == c)));
    }
    Ok((points, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rng: &mut SceneRng) -> Environment {
        random_jet(rng, &jet_names(), &default_box(), 1.0)
    }

    #[test]
    fn heavenly_projection_is_linear() {
        let p = PdeProblem::heavenly(1.0);
        let proj = JetProjector::new(&p).unwrap();
        let mut rng = random::rng(1);
        let r = raw(&mut rng);
        let cj = proj.project(&r, 1e-10, 1e-8).unwrap();
        let g = |n: &str| cj.jets.get(n).unwrap();
        let expect = -g("u25") - g("u13") * g("u24") + g("u14") * g("u23");
        assert!((g("u15") - expect).abs() < 1e-14);
        assert!(cj.residual < 1e-12);
        // untouched entries stay put
        assert_eq!(g("u25"), r.get("u25").unwrap());
        assert_eq!(g("u333"), r.get("u333").unwrap());
    }

    #[test]
    fn fk_projection_and_fixed_point() {
        let p = PdeProblem::fk();
        let proj = JetProjector::new(&p).unwrap();
        let mut rng = random::rng(2);
        let r = raw(&mut rng);
        let cj = proj.project(&r, 1e-10, 1e-8).unwrap();
        let g = |n: &str| cj.jets.get(n).unwrap();
        let expect = (g("u3") * g("u15") - g("u5") * g("u24") + g("u4") * g("u25")) / g("u5");
        assert!((g("u13") - expect).abs() < 1e-12);
        let again = proj.project(&cj.jets, 1e-10, 1e-8).unwrap();
        assert_eq!(again.jets, cj.jets);
    }

    #[test]
    fn unsolvable_principal() {
        let p = PdeProblem::fk();
        let mut rng = random::rng(3);
        let mut r = raw(&mut rng);
        r.set("u5", 0.0);
        assert!(matches!(jet_project(&p, &r), Err(Error::NotSolvable { .. })));
    }

    #[test]
    fn bundled_scenes_parse() {
        for (name, text) in BUNDLED {
            SceneConfig::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        serde_json::from_str::<serde_json::Value>(SCENE_SCHEMA).unwrap();
    }

    #[test]
    fn config_errors() {
        assert!(SceneConfig::from_json(r#"{"kind":"pde","sample":{"count":3}}"#).unwrap_err().is_config());
        assert!(SceneConfig::from_json(r#"{"kind":"cone","sample":{"seed":1}}"#).unwrap_err().is_config());
        let cfg = SceneConfig::from_json(r#"{"kind":"master","sample":{"seed":1,"count":2}}"#).unwrap();
        assert!(run_scene(&cfg).unwrap_err().is_config());
    }
}
