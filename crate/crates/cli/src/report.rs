//! The report envelope shared by every command, rendered as JSON or as key: value blocks.

use std::collections::BTreeMap;
use std::fmt::Write;

use conic_condition::measures::MeasureCertificate;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub value: Value,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub results: BTreeMap<String, Entry>,
    pub seed: u64,
    pub notes: Vec<String>,
}

pub fn digest<'a>(inputs: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

pub fn vector(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

/// Rows first.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    json!(rows)
}

impl Entry {
    pub fn exact(value: Value, path: &str, residual: f64) -> Self {
        Entry {
            value,
            path: path.into(),
            certificate: None,
            residual,
        }
    }

    pub fn with_certificate(mut self, c: Value) -> Self {
        self.certificate = Some(c);
        self
    }

    pub fn measure(c: &MeasureCertificate) -> Self {
        let mut cert = serde_json::Map::new();
        for (name, w) in [("u", &c.u), ("y", &c.y), ("x", &c.x), ("v", &c.v)] {
            if let Some(w) = w {
                cert.insert(name.into(), vector(w));
            }
        }
        if let Some((lo, hi)) = c.bracket {
            cert.insert("bracket".into(), json!([lo, hi]));
        }
        if c.infeasible_side {
            cert.insert("infeasible_side".into(), json!(true));
        }
        if !c.attained {
            cert.insert("attained".into(), json!(false));
        }
        Entry {
            value: json!(c.value),
            path: format!("{:?}", c.path),
            certificate: (!cert.is_empty()).then_some(Value::Object(cert)),
            residual: c.alignment_residual,
        }
    }
}

impl Report {
    pub fn new(command: &str, inputs_digest: String, seed: u64) -> Self {
        Report {
            command: command.into(),
            inputs_digest,
            results: BTreeMap::new(),
            seed,
            notes: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, e: Entry) {
        self.results.insert(name.into(), e);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Notes every result whose residual exceeds `tol`.
    pub fn flag_residuals(&mut self, tol: f64) {
        let over: Vec<String> = self
            .results
            .iter()
            .filter(|(_, e)| e.residual > tol)
            .map(|(k, e)| format!("{k}: residual {:e} exceeds tolerance {tol:e}", e.residual))
            .collect();
        self.notes.extend(over);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "inputs_digest: {}", self.inputs_digest);
        let _ = writeln!(s, "seed: {}", self.seed);
        for (name, e) in &self.results {
            let _ = writeln!(s, "\n[{name}]");
            let _ = writeln!(s, "value: {}", compact(&e.value));
            let _ = writeln!(s, "path: {}", e.path);
            let _ = writeln!(s, "residual: {:e}", e.residual);
            if let Some(Value::Object(c)) = &e.certificate {
                for (k, v) in c {
                    let _ = writeln!(s, "certificate.{k}: {}", compact(v));
                }
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        s
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conic_condition::measures::Path;

    #[test]
    fn digest_separates_inputs() {
        assert_ne!(digest([&b"ab"[..], b"c"]), digest([&b"a"[..], b"bc"]));
        assert_eq!(digest([&b"x"[..]]).len(), 64);
    }

    #[test]
    fn measure_entries_keep_path_and_witnesses() {
        let mut c = MeasureCertificate::new(0.5, Path::ClosedForm);
        c.u = Some(DVector::from_vec(vec![1.0, 0.0]));
        let e = Entry::measure(&c);
        assert_eq!(e.path, "ClosedForm");
        assert_eq!(e.certificate.unwrap()["u"], json!([1.0, 0.0]));
    }

    #[test]
    fn text_blocks_list_every_result() {
        let mut r = Report::new("measure", digest([&b"{}"[..]]), 3);
        r.add("nu", Entry::exact(json!(0.5), "ClosedForm", 0.0));
        r.add("sigma", Entry::exact(json!(0.25), "LpExact", 2e-3));
        r.flag_residuals(1e-7);
        let t = r.to_text();
        assert!(t.contains("[nu]\nvalue: 0.5\npath: ClosedForm"));
        assert!(t.contains("sigma: residual"));
    }
}
