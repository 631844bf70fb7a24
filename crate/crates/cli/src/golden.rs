//! Golden-value suite: pinned numbers recomputed from embedded configs.

use std::fmt::Write as _;
use std::path::Path;

use charged_pphi::oneparticle::{lambda_quant, omega_block};
use charged_pphi::quantization::{quantize, PhaseSpaceGrid};
use charged_pphi::spectral::lowest_eigenpairs;
use charged_pphi::fock::FockBasis;
use charged_pphi::hamiltonian::{assemble, AssemblyOptions};
use serde::Deserialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub case: Vec<GoldenCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    LambdaQuant,
    C0,
    C1,
    MinEigOmega,
    Delta,
    E0,
    Gap,
}

/// A finite number or one of `"inf"`, `"-inf"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Number(f64),
    Text(String),
}

impl Expected {
    fn value(&self) -> CliResult<f64> {
        match self {
            Self::Number(x) => Ok(*x),
            Self::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(CliError::Config(format!("golden expected value {other:?} is not a number or \"inf\""))),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenCase {
    pub name: String,
    pub quantity: Quantity,
    pub expected: Expected,
    /// Absolute tolerance, or relative when `relative = true`.
    pub tolerance: f64,
    #[serde(default)]
    pub relative: bool,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub name: String,
    pub expected: f64,
    pub computed: Option<f64>,
    pub error: Option<String>,
    pub pass: bool,
}

pub fn load(path: &Path) -> CliResult<Suite> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::GoldenMissing(format!("{}: {e}", path.display())))?;
    let suite: Suite = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if suite.case.is_empty() {
        return Err(CliError::GoldenMissing(format!("{} contains no cases", path.display())));
    }
    Ok(suite)
}

fn compute(case: &GoldenCase) -> CliResult<f64> {
    let cfg = &case.config;
    let r = cfg.validate()?;
    let l = r.base();
    Ok(match case.quantity {
        Quantity::LambdaQuant => lambda_quant(&r.potential, l)?.lambda_quant.to_f64(),
        Quantity::C0 => lambda_quant(&r.potential, l)?.c0,
        Quantity::C1 => lambda_quant(&r.potential, l)?.c1,
        Quantity::MinEigOmega => omega_block(cfg.coupling.lambda, &r.potential, l).min_eigenvalue(),
        Quantity::Delta => {
            let q = &cfg.quantization;
            let grid = PhaseSpaceGrid::from_potential(q.points, q.dx, cfg.lattice.mass, &r.potential)?;
            quantize(&grid)?.1.delta
        }
        Quantity::E0 | Quantity::Gap => {
            let basis = FockBasis::new(l.len(), cfg.fock.n_max, cfg.fock.dimension_cap)?;
            let opts = AssemblyOptions { override_stability: cfg.override_stability };
            let b = assemble(&r.interaction, &r.potential, cfg.coupling.lambda, &basis, l, opts)?;
            let p = lowest_eigenpairs(&b.h, 2, &r.spectral)?;
            if case.quantity == Quantity::E0 {
                p.values[0]
            } else {
                p.values[1] - p.values[0]
            }
        }
    })
}

fn agrees(expected: f64, computed: f64, tol: f64, relative: bool) -> bool {
    if expected.is_infinite() || computed.is_infinite() {
        return expected == computed;
    }
    let scale = if relative { expected.abs().max(f64::MIN_POSITIVE) } else { 1.0 };
    (computed - expected).abs() <= tol * scale
}

pub fn run_case(case: &GoldenCase) -> CliResult<CaseResult> {
    let expected = case.expected.value()?;
    if !(case.tolerance >= 0.0 && case.tolerance.is_finite()) {
        return Err(CliError::Config(format!("golden case {}: tolerance must be non-negative", case.name)));
    }
    Ok(match compute(case) {
        Ok(x) => CaseResult {
            name: case.name.clone(),
            expected,
            computed: Some(x),
            error: None,
            pass: agrees(expected, x, case.tolerance, case.relative),
        },
        Err(e) => CaseResult { name: case.name.clone(), expected, computed: None, error: Some(e.to_string()), pass: false },
    })
}

pub fn table(results: &[CaseResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>24}  {:>24}  {:>10}  result", "name", "expected", "computed", "|diff|");
    for r in results {
        let computed = r.computed.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "-".into());
        let diff = match r.computed {
            Some(x) if x == r.expected => "0".into(),
            Some(x) => format!("{:.2e}", (x - r.expected).abs()),
            None => "-".into(),
        };
        let status = if r.pass { "PASS" } else { "FAIL" };
        let _ = write!(out, "{:<width$}  {:>24}  {:>24}  {:>10}  {status}", r.name, format!("{:.16e}", r.expected), computed, diff);
        if let Some(e) = &r.error {
            let _ = write!(out, " ({e})");
        }
        out.push('\n');
    }
    out
}

/// Runs the suite, prints the table, and fails naming every mismatched value.
pub fn check(path: &Path) -> CliResult<Vec<CaseResult>> {
    let suite = load(path)?;
    let results = suite.case.iter().map(run_case).collect::<CliResult<Vec<_>>>()?;
    print!("{}", table(&results));
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        println!("failed: {}", failed.join(", "));
        Err(CliError::GoldenFailed { failed: failed.len(), total: results.len() })
    }
}
