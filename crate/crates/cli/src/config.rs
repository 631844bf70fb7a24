//! Experiment configuration: a single TOML file with nested sections.
//!
//! Unknown keys are rejected at every level. After parsing, [`ExperimentConfig::validate`]
//! checks ranges and builds the core objects so later stages cannot fail on input shape.

use std::path::{Path, PathBuf};

use charged_pphi::fock::DEFAULT_DIMENSION_CAP;
use charged_pphi::hamiltonian::{InteractionSpec, Monomial};
use charged_pphi::lattice::{MomentumLattice, NestedPair};
use charged_pphi::linalg::LanczosOptions;
use charged_pphi::oneparticle::{Profile, SampledProfile};
use charged_pphi::spectral::SpectralOptions;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const OUTPUT_DIR_ENV: &str = "CPPHI_OUTPUT_DIR";
pub const THREADS_ENV: &str = "CPPHI_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub potential: ProfileConfig,
    #[serde(default)]
    pub polynomial: PolynomialConfig,
    #[serde(default = "ProfileConfig::unit_gaussian")]
    pub cutoff: ProfileConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    /// Permit `|lambda| >= lambda_quant`.
    #[serde(default)]
    pub override_stability: bool,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub quantization: QuantizationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for randomized start vectors.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0x5eed
}

/// Inverse spacing: an integer or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Integer(i64),
    Text(String),
}

impl RationalValue {
    pub fn parse(&self) -> CliResult<Rational64> {
        let r = match self {
            Self::Integer(n) => Rational64::from_integer(*n),
            Self::Text(s) => {
                let s = s.trim();
                let parsed = match s.split_once('/') {
                    Some((p, q)) => p.trim().parse::<i64>().ok().zip(q.trim().parse::<i64>().ok()),
                    None => s.parse::<i64>().ok().map(|p| (p, 1)),
                };
                match parsed {
                    Some((_, 0)) | None => return Err(CliError::Config(format!("lattice.v = {s:?} is not a rational p/q"))),
                    Some((p, q)) => Rational64::new(p, q),
                }
            }
        };
        if r <= Rational64::from_integer(0) {
            return Err(CliError::Config(format!("lattice.v must be positive, got {r}")));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub v: RationalValue,
    pub kappa: f64,
    #[serde(default = "one")]
    pub mass: f64,
    /// Number of nested levels `v, 2v, 4v, ...` at fixed `kappa`.
    #[serde(default = "one_usize")]
    pub refinement_levels: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    #[default]
    Zero,
    Constant,
    Gaussian,
    Lorentzian,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default)]
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    /// Sampled profiles: first sample position, spacing, values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { kind: ProfileKind::Zero, amplitude: 1.0, width: 1.0, x0: None, dx: None, values: None }
    }
}

impl ProfileConfig {
    fn unit_gaussian() -> Self {
        Self { kind: ProfileKind::Gaussian, ..Self::default() }
    }

    pub fn build(&self, section: &str) -> CliResult<Profile<f64>> {
        let bad = |msg: String| CliError::Config(format!("{section}: {msg}"));
        if !self.amplitude.is_finite() {
            return Err(bad("amplitude must be finite".into()));
        }
        let sampled_keys = self.x0.is_some() || self.dx.is_some() || self.values.is_some();
        if sampled_keys && self.kind != ProfileKind::Sampled {
            return Err(bad("x0, dx and values are only allowed with kind = \"sampled\"".into()));
        }
        match self.kind {
            ProfileKind::Zero => Ok(Profile::Zero),
            ProfileKind::Constant => Ok(Profile::Constant { value: self.amplitude }),
            ProfileKind::Gaussian | ProfileKind::Lorentzian => {
                if !(self.width > 0.0 && self.width.is_finite()) {
                    return Err(bad(format!("width must be positive, got {}", self.width)));
                }
                Ok(if self.kind == ProfileKind::Gaussian {
                    Profile::gaussian(self.amplitude, self.width)
                } else {
                    Profile::lorentzian(self.amplitude, self.width)
                })
            }
            ProfileKind::Sampled => {
                let (Some(x0), Some(dx), Some(values)) = (self.x0, self.dx, self.values.clone()) else {
                    return Err(bad("kind = \"sampled\" needs x0, dx and values".into()));
                };
                let scaled = values.iter().map(|v| v * self.amplitude).collect();
                SampledProfile::new(x0, dx, scaled).map(Profile::Sampled).map_err(|e| bad(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    /// Entries `[alpha1, alpha2, coefficient]`.
    #[serde(default)]
    pub coeffs: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

fn default_n_max() -> usize {
    2
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { n_max: default_n_max(), dimension_cap: default_cap() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizationConfig {
    /// Position grid size for the classical phase space.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_dx")]
    pub dx: f64,
}

fn default_points() -> usize {
    64
}

fn default_dx() -> f64 {
    0.25
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        Self { points: default_points(), dx: default_dx() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_krylov")]
    pub max_krylov: usize,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
    /// Eigenvalues above the ground state to report.
    #[serde(default = "default_depth")]
    pub report_depth: usize,
    /// Resolvent shift; `1 + |E0|` of the coarsest level when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_dense_limit() -> usize {
    4000
}

fn default_tol() -> f64 {
    1e-10
}

fn default_krylov() -> usize {
    160
}

fn default_restarts() -> usize {
    40
}

fn default_depth() -> usize {
    4
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dense_limit: default_dense_limit(),
            tolerance: default_tol(),
            max_krylov: default_krylov(),
            max_restarts: default_restarts(),
            report_depth: default_depth(),
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Field species carrying the wave packet, 1 or 2.
    #[serde(default = "one_usize")]
    pub species: usize,
    #[serde(default = "one")]
    pub k0: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_times() -> Vec<f64> {
    vec![0.0, 4.0, 8.0, 16.0, 32.0]
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { species: 1, k0: 1.0, sigma: default_sigma(), times: default_times() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Core objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// One lattice per refinement level, coarsest first.
    pub lattices: Vec<MomentumLattice<f64>>,
    pub potential: Profile<f64>,
    pub interaction: InteractionSpec<f64>,
    pub spectral: SpectralOptions<f64>,
}

impl Resolved {
    pub fn base(&self) -> &MomentumLattice<f64> {
        &self.lattices[0]
    }

    pub fn pairs(&self) -> CliResult<Vec<NestedPair<f64>>> {
        Ok(self
            .lattices
            .windows(2)
            .map(|w| NestedPair::new(w[0].clone(), w[1].clone()))
            .collect::<Result<_, _>>()?)
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Range checks plus construction of lattices, potential and interaction.
    pub fn validate(&self) -> CliResult<Resolved> {
        let l = &self.lattice;
        positive("lattice.kappa", l.kappa)?;
        positive("lattice.mass", l.mass)?;
        if !(1..=8).contains(&l.refinement_levels) {
            return Err(CliError::Config(format!("lattice.refinement_levels must be in 1..=8, got {}", l.refinement_levels)));
        }
        let v = l.v.parse()?;
        let lattices = (0..l.refinement_levels)
            .map(|i| MomentumLattice::new(v * Rational64::from_integer(1 << i), l.kappa, l.mass))
            .collect::<Result<Vec<_>, _>>()?;

        let potential = self.potential.build("potential")?;
        let cutoff = self.cutoff.build("cutoff")?;
        for (a1, a2, c) in &self.polynomial.coeffs {
            if !c.is_finite() {
                return Err(CliError::Config(format!("polynomial coefficient for [{a1}, {a2}] is not finite")));
            }
        }
        let monomials = self.polynomial.coeffs.iter().map(|&(a1, a2, c)| Monomial::new(a1, a2, c)).collect();
        let interaction = InteractionSpec::new(monomials, cutoff)?;

        if !self.coupling.lambda.is_finite() {
            return Err(CliError::Config("coupling.lambda must be finite".into()));
        }
        if self.fock.dimension_cap == 0 {
            return Err(CliError::Config("fock.dimension_cap must be positive".into()));
        }
        if self.quantization.points < 4 {
            return Err(CliError::Config("quantization.points must be at least 4".into()));
        }
        positive("quantization.dx", self.quantization.dx)?;

        let s = &self.solver;
        positive("solver.tolerance", s.tolerance)?;
        if s.dense_limit == 0 || s.max_krylov < 2 || s.max_restarts == 0 {
            return Err(CliError::Config("solver.dense_limit, max_krylov and max_restarts must be positive".into()));
        }
        if s.report_depth == 0 {
            return Err(CliError::Config("solver.report_depth must be at least 1".into()));
        }
        if let Some(b) = s.beta {
            if !b.is_finite() {
                return Err(CliError::Config("solver.beta must be finite".into()));
            }
        }

        let p = &self.probe;
        if !(p.species == 1 || p.species == 2) {
            return Err(CliError::Config(format!("probe.species must be 1 or 2, got {}", p.species)));
        }
        positive("probe.sigma", p.sigma)?;
        if !p.k0.is_finite() || p.times.is_empty() || p.times.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("probe.k0 and probe.times must be finite and times non-empty".into()));
        }

        let spectral = SpectralOptions {
            dense_limit: s.dense_limit,
            lanczos: LanczosOptions { tol: s.tolerance, max_krylov: s.max_krylov, max_restarts: s.max_restarts, seed: self.seed },
            ..SpectralOptions::default()
        };
        Ok(Resolved { lattices, potential, interaction, spectral })
    }

    /// Output directory with the environment override applied.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }

    /// Canonical JSON of every physics and solver setting; object keys sorted,
    /// defaults filled in, output location excluded.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output");
        }
        value.sort_all_objects();
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
