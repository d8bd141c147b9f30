//! Instance configuration files.
//!
//! A config is a JSON (or TOML) object with a `kind` key; the remaining keys
//! depend on the kind. Matrices are row-major arrays of arrays.

use std::fmt;
use std::path::Path;

use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use gauss_holder::symlin::SymMatrix;

pub type Matrix = Vec<Vec<f64>>;

/// Largest asymmetry accepted in a symmetric matrix before symmetrizing.
pub const ASYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Theorem1,
    Region,
    Hyper,
    Lebesgue,
    Young,
    Barthe,
    Prekopa,
    Entropy,
}

/// A declarative test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `exp⟨α, x⟩`.
    ExpLinear { alpha: Vec<f64> },
    /// `scale·exp(⟨linear, x⟩ − ½⟨quad·x, x⟩)`.
    Gaussian { scale: f64, linear: Vec<f64>, quad: Matrix },
    /// Indicator of a closed box, one `[lo, hi]` pair per coordinate.
    IndicatorBox { bounds: Vec<[f64; 2]> },
    /// `1/(1 + |x|²)`.
    RationalBump {},
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    #[default]
    ClosedForm,
    Quadrature {
        nodes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        panels: Option<usize>,
    },
    Mc { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperDirectionSpec {
    Forward,
    Reverse,
}

// The `kind` key is read separately, so each body skips it.
type KindKey = Option<IgnoredAny>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1Config {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    /// Bivariate shorthand: `T = [[1, t], [t, 1]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Matrix>,
    /// Block sizes; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionSpec>,
    /// Direction to test instead of the one the criterion certifies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimSpec>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimSpec {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    /// Bivariate frame with correlation `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Co-isometries `Uᵢ`, stacked into an orthogonal-column frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    /// Number of samples along the bivariate boundary curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    pub p: f64,
    pub q: f64,
    pub t: f64,
    /// Inferred from the exponents when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<HyperDirectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// The built-in family of 20 functions when empty and `dim = 1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LebesgueConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    pub maps: Vec<Matrix>,
    pub b: Matrix,
    pub p: Vec<f64>,
    /// The Gaussian extremizers when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    pub p: f64,
    pub q: f64,
    /// Derived from `1/p + 1/q = 1 + 1/r` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub method: MethodSpec,
}

/// Either the two-function instance (`lambda`, `n`) or general data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BartheData {
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub maps: Option<Vec<Matrix>>,
    pub a: Option<Matrix>,
    pub c: Option<Vec<f64>>,
    pub w: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginalConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// `f, g, F, G` on the line.
    pub functions: Vec<FunctionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BartheConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Matrix>,
    pub rho: f64,
    /// The Gaussian equality family when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<OriginalConfig>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrekopaConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    pub lambda: f64,
    /// `f, g, h` on the line.
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default, rename = "kind", skip_serializing)]
    _kind: KindKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Matrix>,
    /// Probability densities, one per block.
    pub functions: Vec<FunctionSpec>,
    /// Also compare the closed-form `ρ`-derivative at 1 with a finite difference.
    #[serde(default = "yes")]
    pub derivative: bool,
    #[serde(default)]
    pub method: MethodSpec,
}

fn yes() -> bool {
    true
}

impl BartheConfig {
    pub fn data(&self) -> BartheData {
        BartheData {
            lambda: self.lambda,
            n: self.n,
            maps: self.maps.clone(),
            a: self.a.clone(),
            c: self.c.clone(),
            w: self.w.clone(),
        }
    }
}

impl EntropyConfig {
    pub fn data(&self) -> BartheData {
        BartheData {
            lambda: self.lambda,
            n: self.n,
            maps: self.maps.clone(),
            a: self.a.clone(),
            c: self.c.clone(),
            w: self.w.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceConfig {
    Theorem1(Theorem1Config),
    Region(RegionConfig),
    Hyper(HyperConfig),
    Lebesgue(LebesgueConfig),
    Young(YoungConfig),
    Barthe(BartheConfig),
    Prekopa(PrekopaConfig),
    Entropy(EntropyConfig),
}

impl InstanceConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InstanceConfig::Theorem1(_) => "theorem1",
            InstanceConfig::Region(_) => "region",
            InstanceConfig::Hyper(_) => "hyper",
            InstanceConfig::Lebesgue(_) => "lebesgue",
            InstanceConfig::Young(_) => "young",
            InstanceConfig::Barthe(_) => "barthe",
            InstanceConfig::Prekopa(_) => "prekopa",
            InstanceConfig::Entropy(_) => "entropy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syntax {
    Json,
    Toml,
}

impl Syntax {
    /// TOML for `.toml` files, JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Syntax::Toml,
            _ => Syntax::Json,
        }
    }
}

/// A config that failed to parse, with a 1-based position when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C" to its Display
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(k) => full[..k].to_string(),
            None => full,
        };
        ConfigError { line: e.line().max(1), column: e.column().max(1), message }
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let (line, column) = match e.span() {
        Some(span) => line_column(text, span.start),
        None => (1, 1),
    };
    ConfigError { line, column, message: e.message().to_string() }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |k| before.len() - k - 1) + 1;
    (line, column)
}

#[derive(Deserialize)]
struct KindOnly {
    kind: Kind,
}

fn parse_as<T: for<'de> Deserialize<'de>>(text: &str, syntax: Syntax) -> Result<T, ConfigError> {
    match syntax {
        Syntax::Json => serde_json::from_str(text).map_err(ConfigError::from),
        Syntax::Toml => toml::from_str(text).map_err(|e| toml_error(text, e)),
    }
}

/// Parses a config. The `kind` key is read first so that field errors in the
/// body keep their line and column.
pub fn parse(text: &str, syntax: Syntax) -> Result<InstanceConfig, ConfigError> {
    let KindOnly { kind } = parse_as(text, syntax)?;
    Ok(match kind {
        Kind::Theorem1 => InstanceConfig::Theorem1(parse_as(text, syntax)?),
        Kind::Region => InstanceConfig::Region(parse_as(text, syntax)?),
        Kind::Hyper => InstanceConfig::Hyper(parse_as(text, syntax)?),
        Kind::Lebesgue => InstanceConfig::Lebesgue(parse_as(text, syntax)?),
        Kind::Young => InstanceConfig::Young(parse_as(text, syntax)?),
        Kind::Barthe => InstanceConfig::Barthe(parse_as(text, syntax)?),
        Kind::Prekopa => InstanceConfig::Prekopa(parse_as(text, syntax)?),
        Kind::Entropy => InstanceConfig::Entropy(parse_as(text, syntax)?),
    })
}

/// Symmetric matrix from rows, rejecting asymmetry above [`ASYMMETRY_TOL`].
pub fn sym(rows: &Matrix) -> gauss_holder::Result<SymMatrix> {
    SymMatrix::from_rows(rows, ASYMMETRY_TOL)
}

/// Rectangular matrix from rows.
pub fn rect(rows: &Matrix) -> gauss_holder::Result<gauss_holder::symlin::RectMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(gauss_holder::Error::InvalidInput("matrix rows must be non-empty and of equal length".into()));
    }
    Ok(gauss_holder::symlin::RectMatrix::from_fn(r, c, |i, j| rows[i][j]))
}
