//! TOML scenario files.
//!
//! ```toml
//! name = "single-kernel"
//! branch = "plus"
//! solution_path = "transform"
//!
//! [seed]
//! kind = "kernels"
//! [[seed.kernels]]
//! a = "1"
//! b = "1*y"
//!
//! [grid]
//! x0 = -3.0
//! x1 = 3.0
//! nx = 21
//! y0 = -3.0
//! y1 = 3.0
//! ny = 21
//! t0 = 0.0
//! t1 = 1.0
//! nt = 5
//!
//! [[outputs]]
//! format = "csv"
//! path = "single.csv"
//! ```

use std::path::{Path, PathBuf};

use dlw_core::field::PerturbedH;
use dlw_core::residual::{grid_samples, PointResidual};
use dlw_core::seedlab::{HeatPolynomial, Kernel};
use dlw_core::transform::{ExactSampler, TransformSampler};
use dlw_core::{
    Branch, CoeffExpr, ExactParams, FieldPair, FieldSampler, GridSpec, Point, ResidualReport,
    SampleError, SeedField, SeedSpec, StencilConfig,
};
use serde::{Deserialize, Serialize};

use crate::{io_error, CliError, CliResult};

pub const DEFAULT_MAX_RESIDUAL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionPath {
    #[default]
    Transform,
    Exact,
    ExactConst,
}

impl SolutionPath {
    pub fn name(self) -> &'static str {
        match self {
            SolutionPath::Transform => "transform",
            SolutionPath::Exact => "exact",
            SolutionPath::ExactConst => "exact-const",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Constant,
    Kernels,
    Poly,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyConfig {
    #[serde(default = "zero_expr")]
    pub c2: String,
    #[serde(default = "zero_expr")]
    pub c1: String,
    #[serde(default = "zero_expr")]
    pub c0: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub kind: SeedKind,
    /// Defaults to 0 for `poly` and 1 otherwise.
    pub constant: Option<f64>,
    #[serde(default)]
    pub kernels: Vec<KernelConfig>,
    pub poly: Option<PolyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StencilSection {
    #[serde(default = "default_step")]
    pub step: f64,
}

impl Default for StencilSection {
    fn default() -> Self {
        StencilSection {
            step: default_step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_threshold")]
    pub max_residual: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_residual: DEFAULT_MAX_RESIDUAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSpec {
    pub format: ExportFormat,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebugSection {
    /// Adds `perturb_h * x^2` to `h`. Any nonzero value breaks the solution.
    #[serde(default)]
    pub perturb_h: f64,
}

/// A scenario as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub branch: Branch,
    #[serde(default)]
    pub solution_path: SolutionPath,
    pub seed: SeedConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub stencil: StencilSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub outputs: Vec<ExportSpec>,
    #[serde(default)]
    pub debug: DebugSection,
}

fn one() -> f64 {
    1.0
}

fn zero_expr() -> String {
    "0".into()
}

fn default_step() -> f64 {
    StencilConfig::default().step
}

fn default_threshold() -> f64 {
    DEFAULT_MAX_RESIDUAL
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub step: Option<f64>,
    pub threshold: Option<f64>,
    pub branch: Option<Branch>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("invalid scenario: {e}")))
    }

    pub fn from_value(value: toml::Value) -> CliResult<Self> {
        value
            .try_into()
            .map_err(|e| CliError::Input(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(step) = o.step {
            self.stencil.step = step;
        }
        if let Some(t) = o.threshold {
            self.thresholds.max_residual = t;
        }
        if let Some(b) = o.branch {
            self.branch = b;
        }
    }

    /// Validates and turns the description into evaluable objects.
    pub fn build(&self) -> CliResult<Built> {
        self.grid
            .validate()
            .map_err(|e| CliError::Input(format!("grid: {e}")))?;
        let stencil = StencilConfig::new(self.stencil.step)
            .map_err(|e| CliError::Input(format!("stencil: {e}")))?;
        let threshold = self.thresholds.max_residual;
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(CliError::Input(format!(
                "thresholds.max_residual must be positive, got {threshold}"
            )));
        }
        if !self.debug.perturb_h.is_finite() {
            return Err(CliError::Input("debug.perturb_h must be finite".into()));
        }

        let spec = self.seed_spec()?;
        let seed =
            SeedField::new(spec.clone()).map_err(|e| CliError::Input(format!("seed: {e}")))?;
        let solution = match self.solution_path {
            SolutionPath::Transform => Solution::Transform(TransformSampler::new(seed.clone())),
            SolutionPath::Exact | SolutionPath::ExactConst => Solution::Exact(ExactSampler {
                params: self.exact_params(&spec)?,
            }),
        };
        Ok(Built {
            seed,
            solution,
            perturb_h: self.debug.perturb_h,
            grid: self.grid,
            stencil,
            threshold,
        })
    }

    fn seed_spec(&self) -> CliResult<SeedSpec> {
        let s = &self.seed;
        let bad = |msg: &str| Err(CliError::Input(format!("seed: {msg}")));
        match s.kind {
            SeedKind::Constant if !s.kernels.is_empty() || s.poly.is_some() => {
                return bad("kind \"constant\" takes neither kernels nor poly")
            }
            SeedKind::Kernels if s.kernels.is_empty() => {
                return bad("kind \"kernels\" needs at least one [[seed.kernels]]")
            }
            SeedKind::Kernels if s.poly.is_some() => {
                return bad("kind \"kernels\" does not take [seed.poly]")
            }
            SeedKind::Poly if s.poly.is_none() => return bad("kind \"poly\" needs [seed.poly]"),
            SeedKind::Poly if !s.kernels.is_empty() => {
                return bad("kind \"poly\" does not take kernels")
            }
            _ => {}
        }
        let default_constant = if s.kind == SeedKind::Poly { 0.0 } else { 1.0 };
        let constant_term = s.constant.unwrap_or(default_constant);
        if !constant_term.is_finite() {
            return bad("constant must be finite");
        }
        let kernels = s
            .kernels
            .iter()
            .enumerate()
            .map(|(i, k)| {
                if !k.amplitude.is_finite() {
                    return Err(CliError::Input(format!(
                        "seed.kernels[{i}].amplitude must be finite"
                    )));
                }
                Ok(Kernel::new(
                    k.amplitude,
                    parse_expr(&format!("seed.kernels[{i}].a"), &k.a)?,
                    parse_expr(&format!("seed.kernels[{i}].b"), &k.b)?,
                ))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let poly = s
            .poly
            .as_ref()
            .map(|p| {
                Ok::<_, CliError>(HeatPolynomial {
                    c2: parse_expr("seed.poly.c2", &p.c2)?,
                    c1: parse_expr("seed.poly.c1", &p.c1)?,
                    c0: parse_expr("seed.poly.c0", &p.c0)?,
                })
            })
            .transpose()?;
        Ok(SeedSpec {
            branch: self.branch,
            constant_term,
            kernels,
            poly,
        })
    }

    /// The closed forms only cover `1 + exp(a x - sigma a^2 t + b)`.
    fn exact_params(&self, spec: &SeedSpec) -> CliResult<ExactParams> {
        let path = self.solution_path.name();
        let single = spec.kernels.len() == 1
            && spec.poly.is_none()
            && spec.constant_term == 1.0
            && spec.kernels[0].amplitude == 1.0;
        if !single {
            return Err(CliError::Input(format!(
                "solution_path \"{path}\" needs exactly one kernel with amplitude 1, constant 1 and no poly"
            )));
        }
        let k = &spec.kernels[0];
        if self.solution_path == SolutionPath::Exact {
            return Ok(ExactParams::General {
                a: k.a.clone(),
                b: k.b.clone(),
                branch: self.branch,
            });
        }
        let (a, c, d) = affine_coefficients(&k.a, &k.b).ok_or_else(|| {
            CliError::Input(format!(
                "solution_path \"{path}\" needs a constant `a` and `b` affine in y"
            ))
        })?;
        Ok(ExactParams::Constant {
            a,
            c,
            d,
            branch: self.branch,
        })
    }
}

fn parse_expr(field: &str, text: &str) -> CliResult<CoeffExpr> {
    CoeffExpr::parse(text).map_err(|e| CliError::Input(format!("{field} = \"{text}\": {e}")))
}

const PROBE_Y: [f64; 5] = [-2.5, -1.0, 0.0, 0.7, 3.0];

/// `(a, c, d)` when `a(y)` is constant and `b(y) = c y + d` on a set of probe points.
fn affine_coefficients(a: &CoeffExpr, b: &CoeffExpr) -> Option<(f64, f64, f64)> {
    let a0 = a.eval_dual(0.0).ok()?;
    let b0 = b.eval_dual(0.0).ok()?;
    let same = |u: f64, v: f64| (u - v).abs() <= 1e-12 * (1.0 + v.abs());
    for y in PROBE_Y {
        let ay = a.eval_dual(y).ok()?;
        let by = b.eval_dual(y).ok()?;
        if !same(ay.value, a0.value)
            || ay.deriv != 0.0
            || !same(by.deriv, b0.deriv)
            || !same(by.value, b0.deriv * y + b0.value)
        {
            return None;
        }
    }
    Some((a0.value, b0.deriv, b0.value))
}

#[derive(Debug, Clone)]
pub enum Solution {
    Transform(TransformSampler),
    Exact(ExactSampler),
}

impl FieldSampler for Solution {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        match self {
            Solution::Transform(s) => s.sample(p),
            Solution::Exact(s) => s.sample(p),
        }
    }

    fn check_footprint(&self, p: Point, radius: f64) -> Result<(), SampleError> {
        match self {
            Solution::Transform(s) => s.check_footprint(p, radius),
            Solution::Exact(s) => s.check_footprint(p, radius),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Built {
    pub seed: SeedField,
    pub solution: Solution,
    pub perturb_h: f64,
    pub grid: GridSpec,
    pub stencil: StencilConfig,
    pub threshold: f64,
}

/// Per-point data behind the CSV export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub point: Point,
    pub phi: f64,
    /// `None` for skipped points.
    pub values: Option<(FieldPair, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<Row>,
    pub report: ResidualReport,
}

impl Built {
    pub fn sampler(&self) -> PerturbedH<&Solution> {
        PerturbedH {
            inner: &self.solution,
            amount: self.perturb_h,
        }
    }

    pub fn evaluate(&self) -> Evaluation {
        let sampler = self.sampler();
        let samples = grid_samples(&sampler, &self.grid, &self.stencil);
        let report = ResidualReport::aggregate(&self.grid, &self.stencil, &samples);
        let rows = samples
            .iter()
            .map(|PointResidual { point, outcome }| {
                let phi = self.seed.value(*point).unwrap_or(f64::NAN);
                let values = match outcome {
                    Ok((r1, r2)) => sampler.sample(*point).ok().map(|f| (f, *r1, *r2)),
                    Err(_) => None,
                };
                Row {
                    point: *point,
                    phi,
                    values,
                }
            })
            .collect();
        Evaluation { rows, report }
    }
}
