//! Machine-readable run reports.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level report written as `report.json`. `timestamp` is the only field
/// that varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub timestamp: String,
    pub theorem: String,
    pub params: Value,
    #[serde(serialize_with = "finite_or_tag")]
    pub lhs: Option<f64>,
    #[serde(serialize_with = "finite_or_tag")]
    pub rhs: Option<f64>,
    #[serde(serialize_with = "finite_or_tag")]
    pub constant: Option<f64>,
    #[serde(serialize_with = "finite_or_tag")]
    pub ratio: Option<f64>,
    pub pass: bool,
    pub diagnostics: Value,
}

impl Report {
    pub fn new(theorem: &str, params: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            timestamp: timestamp(),
            theorem: theorem.to_string(),
            params,
            lhs: None,
            rhs: None,
            constant: None,
            ratio: None,
            pass: false,
            diagnostics: json!({}),
        }
    }

    pub fn sides(mut self, lhs: f64, rhs: f64, constant: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self.constant = Some(constant);
        self.ratio = Some(lhs / rhs);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Seconds since the Unix epoch, as a decimal string.
pub fn timestamp() -> String {
    let d = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}

/// Non-finite values are written as the strings `"inf"`, `"-inf"`, `"nan"`
/// instead of `null`, so an overflowed ratio stays visible.
fn finite_or_tag<S: serde::Serializer>(
    x: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        None => s.serialize_none(),
        Some(v) if v.is_finite() => s.serialize_f64(*v),
        Some(v) if v.is_nan() => s.serialize_str("nan"),
        Some(v) if *v > 0.0 => s.serialize_str("inf"),
        Some(_) => s.serialize_str("-inf"),
    }
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// JSON with `timestamp` removed, for comparing runs.
pub fn comparable(json: &str) -> Result<Value> {
    let mut v: Value = serde_json::from_str(json)?;
    if let Value::Object(o) = &mut v {
        o.remove("timestamp");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip_ignores_timestamp() {
        let mut a = Report::new("x", json!({"t": 0.1})).sides(1.0, 2.0, 3.0);
        a.pass = true;
        let mut b = a.clone();
        b.timestamp = "0".into();
        assert_eq!(
            comparable(&a.to_json().unwrap()).unwrap(),
            comparable(&b.to_json().unwrap()).unwrap()
        );
        let v: Value = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(v["ratio"], json!(0.5));
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
    }

    #[test]
    fn floats_round_trip_exactly() {
        let x = 0.1 + 0.2;
        let r = Report::new("x", json!({})).sides(x, 1.0 / 3.0, std::f64::consts::PI);
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["lhs"].as_f64().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn infinite_ratio_is_tagged() {
        let r = Report::new("x", json!({})).sides(1.0, 0.0, 1.0);
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["ratio"], json!("inf"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/report.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
