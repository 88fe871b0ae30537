//! JSON file formats. Point and edge indices are 1-based in files.

use std::fs;
use std::io::Write;
use std::path::Path;

use dispersion_core::{validate_instance, Configuration, DualVector, Graph, Instance, RawInstance};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(default)]
    pub weights: Vec<(usize, usize, f64)>,
    pub radii: Vec<f64>,
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance, Failure> {
        let mut problems = Vec::new();
        let mut weights = Vec::with_capacity(self.weights.len());
        for &(i, j, w) in &self.weights {
            if i == 0 || j == 0 {
                problems.push(format!(
                    "weight index ({i},{j}) out of range 1..={}",
                    self.n
                ));
            } else {
                weights.push((i - 1, j - 1, w));
            }
        }
        let raw = RawInstance {
            n: self.n,
            weights,
            radii: self.radii.clone(),
        };
        match validate_instance(&raw) {
            Ok(inst) if problems.is_empty() => Ok(inst),
            Ok(_) => Err(Failure::Input(problems.join("; "))),
            Err(errs) => {
                problems.extend(errs.0.iter().map(|v| v.to_string()));
                Err(Failure::Input(problems.join("; ")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn to_graph(&self) -> Result<Graph, Failure> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(i, j, w) in &self.edges {
            if i == 0 || j == 0 {
                return Err(Failure::Input(format!(
                    "edge ({i},{j}) out of range 1..={}",
                    self.n
                )));
            }
            edges.push((i - 1, j - 1, w));
        }
        Graph::new(self.n, edges).map_err(|e| Failure::Input(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub status: String,
    pub backend: String,
}

/// Output of `solve`. Non-finite bounds are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub primal_value: f64,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub verdict: String,
    pub points: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Reads a bare JSON value, or the field `key` of a JSON object.
fn unwrap_field<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, Failure> {
    let inner = match read_json::<serde_json::Value>(path)? {
        serde_json::Value::Object(mut map) => map.remove(key).ok_or_else(|| {
            Failure::Input(format!(
                "{}: expected an array or an object with \"{key}\"",
                path.display()
            ))
        })?,
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_points(path: &Path) -> Result<Configuration, Failure> {
    let points: Vec<Vec<f64>> = unwrap_field(path, "points")?;
    Configuration::new(points).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_x(path: &Path) -> Result<DualVector, Failure> {
    let x: Vec<f64> = unwrap_field(path, "x")?;
    DualVector::new(x).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Writes `value` as pretty JSON to `out`, or to standard output. Files are
/// written to a temporary sibling and renamed, so a failed run never leaves a
/// partial file behind.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Hard(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Hard(format!("cannot write to standard output: {e}")))
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let fail =
                |e: std::io::Error| Failure::Hard(format!("cannot write {}: {e}", path.display()));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
            tmp.write_all(text.as_bytes()).map_err(fail)?;
            tmp.persist(path).map_err(|e| fail(e.error))?;
            Ok(())
        }
    }
}
