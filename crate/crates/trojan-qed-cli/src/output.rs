//! Artifact emission: CSV or JSON with an embedded provenance header.
//!
//! Determinism contract: for a fixed resolved configuration the emitted
//! bytes are identical across runs. The provenance hash is a SHA-256 of
//! the canonical JSON of the resolved run configuration (serde_json's
//! default map is ordered, so the serialization is canonical).

use std::io::Write;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

/// What a subcommand produced.
pub enum Artifact {
    /// Row-oriented data (figure samples, map cells).
    Table { headers: Vec<String>, rows: Vec<Vec<String>> },
    /// Structured report (tables of derived values, solver output).
    Report(Value),
}

/// Run metadata embedded in every artifact.
pub struct Provenance {
    /// SHA-256 (hex) of the canonical resolved-configuration JSON.
    pub config_hash: String,
    pub tool: String,
    pub version: String,
    /// The resolved configuration itself, for self-describing JSON output.
    pub config: Value,
}

impl Provenance {
    pub fn new(config: Value) -> Self {
        let canonical = config.to_string();
        let hash = hex_digest(canonical.as_bytes());
        Self {
            config_hash: hash,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Shortest round-trip decimal for a float (`Display` for f64 is the
/// shortest representation that parses back exactly); deterministic.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Render the artifact to bytes in the requested format.
pub fn render(artifact: &Artifact, format: Format, prov: &Provenance) -> Vec<u8> {
    match format {
        Format::Json => render_json(artifact, prov),
        Format::Csv => render_csv(artifact, prov),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn provenance_value(prov: &Provenance) -> Value {
    serde_json::json!({
        "tool": prov.tool,
        "version": prov.version,
        "config_hash": prov.config_hash,
        "config": prov.config,
    })
}

fn render_json(artifact: &Artifact, prov: &Provenance) -> Vec<u8> {
    let body = match artifact {
        Artifact::Report(v) => serde_json::json!({
            "provenance": provenance_value(prov),
            "data": v,
        }),
        Artifact::Table { headers, rows } => serde_json::json!({
            "provenance": provenance_value(prov),
            "headers": headers,
            "rows": rows,
        }),
    };
    let mut out = serde_json::to_vec_pretty(&body).expect("JSON serialization cannot fail");
    out.push(b'\n');
    out
}

fn render_csv(artifact: &Artifact, prov: &Provenance) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "# tool={} version={}", prov.tool, prov.version).unwrap();
    writeln!(out, "# config_hash={}", prov.config_hash).unwrap();
    let mut w = csv::Writer::from_writer(out);
    match artifact {
        Artifact::Table { headers, rows } => {
            w.write_record(headers).unwrap();
            for row in rows {
                w.write_record(row).unwrap();
            }
        }
        Artifact::Report(v) => {
            // Flatten the report to dotted key/value rows so tabular
            // consumers still get the numbers.
            w.write_record(["key", "value"]).unwrap();
            let mut pairs = Vec::new();
            flatten("", v, &mut pairs);
            for (k, val) in pairs {
                w.write_record([k, val]).unwrap();
            }
        }
    }
    w.into_inner().unwrap()
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, val, out);
            }
        }
        Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), val, out);
            }
        }
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), "null".to_string())),
    }
}

/// Write to the output path, or stdout when none was given.
pub fn write_out(bytes: &[u8], out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}
