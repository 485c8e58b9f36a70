//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::io::{self, Write};

use monopole_boundary::linalg::{CMat, C64};
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// One result: a named value with its error estimate. Verification checks
/// also carry a tolerance and a verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub name: String,
    pub value: Value,
    pub err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Record {
    pub fn new(name: impl Into<String>, value: impl Serialize, err: f64) -> Self {
        Self { name: name.into(), value: serde_json::to_value(value).unwrap_or(Value::Null), err, tol: None, pass: None }
    }

    pub fn complex(name: impl Into<String>, z: C64, err: f64) -> Self {
        Self::new(name, complex_value(z), err)
    }

    /// A check passes when `value < tol`.
    pub fn check(name: impl Into<String>, value: f64, err: f64, tol: f64) -> Self {
        Self::check_with(name, value, err, tol, value < tol)
    }

    pub fn check_with(name: impl Into<String>, value: f64, err: f64, tol: f64, pass: bool) -> Self {
        Self { tol: Some(tol), pass: Some(pass), ..Self::new(name, value, err) }
    }

    pub fn failed(name: impl Into<String>, reason: &str) -> Self {
        Self { tol: None, pass: Some(false), ..Self::new(name, reason, f64::NAN) }
    }
}

pub fn complex_value(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Row-major `{rows, cols, re, im}` form of a complex matrix.
pub fn matrix_value(m: &CMat) -> Value {
    serde_json::to_value(monopole_boundary::linalg::MatJson::from(m)).unwrap_or(Value::Null)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub err_total: f64,
    pub converged: bool,
    pub notes: Vec<String>,
    /// Wall-clock seconds per phase; the only non-deterministic field.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    pub results: Vec<Record>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn new(command: &str, params: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            params,
            results: Vec::new(),
            diagnostics: Diagnostics { converged: true, ..Default::default() },
        }
    }

    pub fn push(&mut self, r: Record) {
        if r.err.is_finite() {
            self.diagnostics.err_total += r.err;
        }
        self.results.push(r);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.diagnostics.notes.push(s.into());
    }

    pub fn time(&mut self, phase: &str, seconds: f64) {
        self.diagnostics.timings.insert(phase.to_string(), seconds);
    }

    /// Whether every check record passed.
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.pass != Some(false))
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        let mut ser = serde_json::Serializer::with_formatter(out, Digits17::default());
        self.serialize(&mut ser).map_err(io::Error::other)
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Pretty JSON formatter writing every float with 17 significant digits.
#[derive(Default)]
pub struct Digits17 {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let mut r = Report::new("t", json!({ "x": 0.1 }));
        r.push(Record::new("third", 1.0 / 3.0, 1e-17));
        let text = r.to_json_string();
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["results"][0]["value"].as_f64(), Some(1.0 / 3.0));
        assert_eq!(back["params"]["x"].as_f64(), Some(0.1));
        assert_eq!(back["schema_version"].as_u64(), Some(1));
    }

    #[test]
    fn non_finite_values_become_null() {
        let mut r = Report::new("t", Value::Null);
        r.push(Record::failed("broken", "no data"));
        let back: Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert!(back["results"][0]["err"].is_null());
        assert!(!r.all_passed());
    }
}
