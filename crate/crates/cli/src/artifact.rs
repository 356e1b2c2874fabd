//! Artifact plumbing: configuration hashing and deterministic writers.
//!
//! A run's configuration is rendered once into a canonical string (command
//! name, every resolved parameter, and a digest of each input file's bytes);
//! its FNV-1a hash ends up in every artifact the run writes. Floats are
//! rendered with the shortest round-trip formatting, so equal configurations
//! produce equal strings and therefore byte-identical artifacts.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ggc_cbi::measure::PositiveMeasure;

use crate::Failure;

pub const TOOL: &str = "ggc-cbi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Provenance block embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
}

/// Canonical configuration string under construction. Keys are appended in
/// the order the command defines them, so the rendering is unique per
/// configuration.
pub struct ConfigKey {
    parts: Vec<String>,
}

impl ConfigKey {
    pub fn new(command: &str) -> Self {
        ConfigKey { parts: vec![command.to_string()] }
    }

    pub fn arg(mut self, key: &str, value: impl Display) -> Self {
        self.parts.push(format!("{key}={value}"));
        self
    }

    pub fn opt(self, key: &str, value: Option<impl Display>) -> Self {
        match value {
            Some(v) => self.arg(key, v),
            None => self,
        }
    }

    pub fn list(mut self, key: &str, values: &[f64]) -> Self {
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.parts.push(format!("{key}=[{}]", joined.join(",")));
        self
    }

    /// Input files enter the configuration through their content digest, so
    /// editing an input changes the hash even when the path stays the same.
    pub fn file(mut self, key: &str, bytes: &[u8]) -> Self {
        self.parts.push(format!("{key}=fnv:{:016x}", fnv1a(bytes)));
        self
    }

    pub fn finish(self) -> Meta {
        let command = self.parts.join(" ");
        let config_hash = format!("{:016x}", fnv1a(command.as_bytes()));
        Meta { tool: TOOL, version: VERSION, command, config_hash }
    }
}

/// Writes a pretty-printed JSON artifact (trailing newline included) and
/// returns its path.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::numeric(format!("serialization failed: {e}")))?;
    body.push('\n');
    fs::write(&path, body)?;
    Ok(path)
}

/// Renders a JSON artifact for stdout echoing (`--json`).
pub fn render_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Failure::numeric(format!("serialization failed: {e}")))
}

/// Writes a CSV artifact: a `#` provenance line, the header, then the rows.
pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &Meta,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut body = format!(
        "# {} {} config={}\n{header}\n",
        meta.tool, meta.version, meta.config_hash
    );
    for row in rows {
        body.push_str(&row);
        body.push('\n');
    }
    fs::write(&path, body)?;
    Ok(path)
}

/// Reads and JSON-parses an input file; parse failures are input errors.
pub fn read_input<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))?;
    Ok((value, bytes))
}

/// Maximal support intervals of the continuous parts of a measure; atomic
/// parts contribute nothing. Touching intervals merge.
fn continuous_blocks(m: &PositiveMeasure) -> Vec<(f64, f64)> {
    fn collect(m: &PositiveMeasure, out: &mut Vec<(f64, f64)>) {
        match m {
            PositiveMeasure::Atomic(_) => {}
            PositiveMeasure::Sum(parts) => {
                for p in parts {
                    collect(p, out);
                }
            }
            other => {
                if let Some(b) = other.support() {
                    out.push(b);
                }
            }
        }
    }
    let mut blocks = Vec::new();
    collect(m, &mut blocks);
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in blocks {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Plot rows (x, density, atom_mass) for a measure: every atom plus a
/// midpoint sampling of each continuous support block (midpoints keep clear
/// of edge singularities). Unbounded blocks are cut ten scale units past
/// their lower edge.
pub fn density_rows(m: &PositiveMeasure) -> Vec<(f64, f64, f64)> {
    const POINTS: usize = 200;
    let mut rows: Vec<(f64, f64, f64)> = m
        .atoms()
        .iter()
        .map(|a| (a.location, m.density_at(a.location), a.weight))
        .collect();
    for (lo, hi) in continuous_blocks(m) {
        let hi_eff = if hi.is_finite() { hi } else { lo + 10.0 * lo.max(1.0) };
        let span = hi_eff - lo;
        for i in 0..POINTS {
            let x = lo + span * (i as f64 + 0.5) / POINTS as f64;
            rows.push((x, m.density_at(x), 0.0));
        }
    }
    rows.sort_by(|p, q| p.0.total_cmp(&q.0));
    rows
}

/// CSV rows for [`density_rows`].
pub fn density_csv_rows(m: &PositiveMeasure) -> Vec<String> {
    density_rows(m)
        .into_iter()
        .map(|(x, d, w)| format!("{x},{d},{w}"))
        .collect()
}
