//! Verification reports and their JSON encoding.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so every value
//! parses back to the same bits; infinities become the strings `"inf"` and
//! `"-inf"`.

use std::io;

use serde::{Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

use gauss_holder::numint::Verdict;

use crate::config::InstanceConfig;

pub const TOOL: &str = "gauss-holder";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A float that survives JSON even when non-finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
    /// A classification or diagnostic with nothing to pass or fail.
    Info,
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Outcome::Pass,
            Verdict::Fail => Outcome::Fail,
            Verdict::Inconclusive => Outcome::Inconclusive,
        }
    }
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub method: String,
    pub tolerance: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Num>,
    pub method: String,
    pub tolerance: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub alpha: Vec<Num>,
    pub lhs: Num,
    pub rhs: Num,
    pub rel_gap: Num,
}

/// Tabular data such as a boundary curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Num>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Invalid,
}

impl Status {
    /// 0 for pass, 1 when a check failed or could not be decided, 2 for
    /// invalid input.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Inconclusive => 1,
            Status::Invalid => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub constants: Vec<Quantity>,
    pub estimates: Vec<Quantity>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The parsed config; running it again reproduces the verdicts.
    pub input: Option<InstanceConfig>,
}

impl Report {
    pub fn new(kind: &str, input: Option<InstanceConfig>) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            kind: kind.into(),
            status: Status::Pass,
            checks: Vec::new(),
            constants: Vec::new(),
            estimates: Vec::new(),
            witnesses: Vec::new(),
            series: Vec::new(),
            notes: Vec::new(),
            error: None,
            input,
        }
    }

    pub fn invalid(kind: &str, input: Option<InstanceConfig>, error: String) -> Self {
        Report { status: Status::Invalid, error: Some(error), ..Report::new(kind, input) }
    }

    pub fn check(&mut self, name: &str, outcome: impl Into<Outcome>, method: &str, tolerance: f64) -> &mut Check {
        self.checks.push(Check {
            name: name.into(),
            outcome: outcome.into(),
            detail: None,
            method: method.into(),
            tolerance: Num(tolerance),
        });
        self.checks.last_mut().expect("just pushed")
    }

    pub fn info(&mut self, name: &str, detail: impl Into<String>, method: &str) {
        self.check(name, Outcome::Info, method, 0.0).detail = Some(detail.into());
    }

    pub fn constant(&mut self, name: &str, value: f64, method: &str, tolerance: f64) {
        self.constants.push(Quantity { name: name.into(), value: Num(value), error: None, method: method.into(), tolerance: Num(tolerance) });
    }

    pub fn estimate(&mut self, name: &str, value: f64, error: Option<f64>, method: &str, tolerance: f64) {
        self.estimates.push(Quantity {
            name: name.into(),
            value: Num(value),
            error: error.map(Num),
            method: method.into(),
            tolerance: Num(tolerance),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Sets `status` from the checks: any fail wins, then inconclusive.
    pub fn finish(mut self) -> Self {
        if self.status != Status::Invalid {
            self.status = if self.checks.iter().any(|c| c.outcome == Outcome::Fail) {
                Status::Fail
            } else if self.checks.iter().any(|c| c.outcome == Outcome::Inconclusive) {
                Status::Inconclusive
            } else {
                Status::Pass
            };
        }
        self
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Pretty JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter::default());
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// [`PrettyFormatter`] with `{:.16e}` floats.
#[derive(Default)]
pub struct SciFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}
