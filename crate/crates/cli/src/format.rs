//! Canonical output formatting.
//!
//! Golden-file testing needs byte-stable artifacts, so every float written
//! to JSON or CSV is first rounded to nine significant decimal digits and
//! struct fields serialize in declaration order.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Rounds to nine significant decimal digits (exact for zero, infinities
/// and NaN).
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    // Shortest-roundtrip printing of the reparsed value then stays within
    // nine significant digits.
    format!("{x:.8e}").parse().expect("9-digit scientific notation reparses")
}

/// Display form of a canonically rounded float.
pub fn fmt_f64(x: f64) -> String {
    format!("{}", sig9(x))
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                if let Some(rounded) = serde_json::Number::from_f64(sig9(x)) {
                    *n = rounded;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Canonical pretty JSON: declaration-ordered fields, sig9-rounded floats,
/// trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    round_floats(&mut v);
    let text = serde_json::to_string_pretty(&v)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    Ok(text + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &canonical_json(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Minimal CSV writer for the plot/report files; fields here never need
/// quoting.
pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
