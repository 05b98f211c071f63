use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const CSV_HEADER: &str = "phi,f,Q,U,weighted_potential";

/// Field description echoed into the summary.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FieldDesc {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDesc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(rename = "FQ", skip_serializing_if = "Option::is_none")]
    pub fq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<&'static str, f64>,
    #[serde(flatten)]
    pub values: BTreeMap<&'static str, Value>,
    /// Empty unless requested, so that default output is reproducible.
    pub timings: BTreeMap<&'static str, f64>,
}

impl Summary {
    pub fn new(command: &'static str) -> Self {
        Summary {
            command,
            field: None,
            alpha0: None,
            fq: None,
            mass: None,
            method: None,
            residuals: BTreeMap::new(),
            values: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn value(&mut self, key: &'static str, v: impl Into<Value>) -> &mut Self {
        self.values.insert(key, v.into());
        self
    }

    /// Serialized form; a non-finite number (which JSON cannot hold) is an
    /// error naming its key.
    pub fn to_json(&self) -> Result<Value, CliError> {
        let mut bad = Vec::new();
        for (k, v) in [
            ("alpha0", self.alpha0),
            ("FQ", self.fq),
            ("mass", self.mass),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                bad.push(k.to_string());
            }
        }
        bad.extend(
            self.residuals
                .iter()
                .filter(|(_, v)| !v.is_finite())
                .map(|(k, _)| format!("residuals.{k}")),
        );
        bad.extend(
            self.timings
                .iter()
                .filter(|(_, v)| !v.is_finite())
                .map(|(k, _)| format!("timings.{k}")),
        );
        bad.extend(
            self.values
                .iter()
                .filter(|(_, v)| v.is_null())
                .map(|(k, _)| k.to_string()),
        );
        if !bad.is_empty() {
            return Err(CliError::NonFinite(bad.join(", ")));
        }
        Ok(serde_json::to_value(self).expect("summary serializes"))
    }
}

/// One CSV row per sample, 17 significant digits, LF line endings.
pub fn density_table(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut s = String::with_capacity(96 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for &(phi, f, q, u) in rows {
        let _ = writeln!(s, "{phi:.16e},{f:.16e},{q:.16e},{u:.16e},{:.16e}", u + q);
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Comparison tolerance for golden values, relative to `max(1, |golden|)`.
pub fn pin_tolerance(command: &str) -> f64 {
    match command {
        "capacity" => 1e-12,
        "gonchar" => 1e-10,
        "support" | "ffunctional" => 1e-9,
        "density" => 1e-8,
        _ => 1e-6,
    }
}

/// Differences between `actual` and `golden`, ignoring timings.
pub fn compare(actual: &Value, golden: &Value, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    diff("", actual, golden, tol, &mut out);
    out
}

fn diff(path: &str, a: &Value, g: &Value, tol: f64, out: &mut Vec<String>) {
    match (a, g) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if !((x - y).abs() <= tol * y.abs().max(1.0)) {
                out.push(format!("{path}: {x} vs golden {y}"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            for (k, gv) in y {
                if k == "timings" {
                    continue;
                }
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match x.get(k) {
                    Some(av) => diff(&p, av, gv, tol, out),
                    None => out.push(format!("{p}: missing")),
                }
            }
            for k in x.keys().filter(|k| *k != "timings" && !y.contains_key(*k)) {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                out.push(format!("{p}: not in golden file"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (av, gv)) in x.iter().zip(y).enumerate() {
                diff(&format!("{path}[{i}]"), av, gv, tol, out);
            }
        }
        _ if a == g => {}
        _ => out.push(format!("{path}: {a} vs golden {g}")),
    }
}
