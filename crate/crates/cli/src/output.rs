//! Run records, JSON/CSV persistence, atomic file replacement.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

/// JSON number, or a string for non-finite values (`"inf"`, `"-inf"`, `"nan"`).
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// What each reported quantity is, keyed by its JSON field name.
pub fn quantity_tags(keys: &[&str]) -> Value {
    let mut out = Map::new();
    for &k in keys {
        let tag = match k {
            "c0" => "relative form bound of the potential against the dispersion",
            "c1" => "Hilbert-Schmidt norm of the commutator kernel",
            "lambda_quant" => "stability threshold for the charge coupling",
            "min_eig_omega" => "bottom of the one-particle block spectrum at the configured coupling",
            "delta" => "classical positivity margin",
            "min_spec_hV" => "bottom of the quantized one-particle energy",
            "j_square_residual" => "complex-structure defect |j^2 + 1|",
            "reconstruction_residual" => "polar decomposition defect",
            "free_check_error" => "free dispersion reproduction error",
            "e0" => "ground energy",
            "eigenvalues" => "low-lying spectrum",
            "residuals" => "eigenpair residual norms",
            "gap" => "first excitation gap",
            "hvz_onset" => "onset of the ground-state-plus-one-particle branch",
            "onset_offset" => "onset minus (E0 + m)",
            "resolvent_gaps" => "resolvent difference norms between adjacent levels",
            "number_resolvent_norms" => "norm of N (H + beta)^-1 per level",
            "values" => "Heisenberg-picture field expectations",
            "cauchy_differences" => "successive differences of the field expectation",
            "recurrence_time" => "finite-size recurrence time 2 pi / min level spacing",
            "bundle" => "Hamiltonian assembly metadata",
            "beta" => "resolvent shift",
            "number_resolvent_spread" => "relative spread of the N-resolvent norms",
            "strictly_decreasing" => "monotonicity of the resolvent gaps",
            "levels" => "per-level records, coarsest first",
            "lattice" => "momentum lattice",
            "coupling" => "coupling constant lambda",
            "grid" => "position grid of the classical phase space",
            "times" => "probe times",
            "trusted" => "probe time below the recurrence time",
            "onset_overlap" => "weight of the onset eigenvector on one-extra-particle states",
            "interaction_certificate" => "minimum of the leading form on the unit circle",
            "override_stability" => "threshold check bypassed",
            _ => "auxiliary",
        };
        out.insert(k.to_string(), json!(tag));
    }
    Value::Object(out)
}

/// Everything written for one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub module_version: String,
    /// Seconds since the Unix epoch; the only field that differs between reruns.
    pub created_unix: u64,
    pub tags: Value,
    pub report: Value,
}

impl RunRecord {
    pub fn new(command: &str, config_hash: String, report: Value) -> Self {
        let keys: Vec<String> = report.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default();
        let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
        Self {
            command: command.to_string(),
            config_hash,
            module_version: format!("cpphi {}", env!("CARGO_PKG_VERSION")),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            tags: quantity_tags(&keys),
            report,
        }
    }
}

/// Writes `bytes` to a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_record(dir: &Path, record: &RunRecord) -> CliResult<PathBuf> {
    let path = dir.join(format!("{}.json", record.command));
    let mut text = serde_json::to_string_pretty(record).expect("record serializes");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Per-level or per-time trace for external plotting.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Trace {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
    }
}

pub fn write_trace(dir: &Path, command: &str, trace: &Trace) -> CliResult<PathBuf> {
    let path = dir.join(format!("{command}.csv"));
    write_atomic(&path, &trace.to_bytes()?)?;
    Ok(path)
}

/// Shortest round-trip formatting for CSV cells.
pub fn cell(x: f64) -> String {
    format!("{x:e}")
}
