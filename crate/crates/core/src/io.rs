//! File formats for finite metric spaces and the canonical JSON writer.
//!
//! JSON: `{"labels": [string...], "matrix": [[real...]...]}` (labels
//! optional). CSV: `n` rows of `n` comma-separated reals with an optional
//! header row of labels.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

#[derive(Debug, Serialize, Deserialize)]
struct MetricFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descriptor: Option<String>,
}

pub fn from_json_str(text: &str) -> Result<FiniteMetricSpace> {
    let file: MetricFile = serde_json::from_str(text)?;
    FiniteMetricSpace::from_rows(file.matrix, file.labels)
}

pub fn from_csv_reader<R: Read>(reader: R) -> Result<FiniteMetricSpace> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels = None;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => {
                labels = Some(record.iter().map(str::to_owned).collect());
            }
            Err(e) => {
                return Err(Error::input(format!("CSV line {}: {e}", line + 1)));
            }
        }
    }
    FiniteMetricSpace::from_rows(rows, labels)
}

/// Reads a space, choosing CSV for `.csv` paths and JSON otherwise.
pub fn read_path(path: &Path) -> Result<FiniteMetricSpace> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        from_csv_reader(fs::File::open(path)?)
    } else {
        from_json_str(&fs::read_to_string(path)?)
    }
}

/// JSON value of a space in the interchange format, with an optional
/// descriptor echo.
pub fn to_json_value(space: &FiniteMetricSpace, descriptor: Option<String>) -> Value {
    let file = MetricFile {
        labels: space.labels().map(<[String]>::to_vec),
        matrix: space.rows().map(<[f64]>::to_vec).collect(),
        descriptor,
    };
    serde_json::to_value(file).expect("metric file serializes")
}

/// Pretty JSON with sorted keys and every float printed with 17
/// significant digits, so identical values give identical bytes.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Rows of scalars stay on one line; nested structure is indented.
            if items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, v) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, v, indent + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(out, &map[key.as_str()], indent + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// 17 significant digits in exponent form, e.g. `2.0000000000000000e0`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes floats that may be infinite: finite values as numbers,
/// others as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn serialize_ext_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}
