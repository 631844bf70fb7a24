//! One function per subcommand. Each returns the JSON report and an optional CSV trace.

use charged_pphi::fock::{FockBasis, Species};
use charged_pphi::hamiltonian::{assemble, AssemblyOptions, HamiltonianBundle};
use charged_pphi::lattice::MomentumLattice;
use charged_pphi::linalg::normalize;
use charged_pphi::oneparticle::{lambda_quant, omega_block};
use charged_pphi::quantization::{quantize, PhaseSpaceGrid};
use charged_pphi::spectral::{
    default_shift, ground_state, heisenberg_probe, higher_order_probe, hvz_gap_probe, lowest_eigenpairs, relative_spread,
    resolvent_convergence,
};
use charged_pphi::Complex;
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Resolved};
use crate::error::{CliError, CliResult};
use crate::output::{cell, num, nums, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    LambdaQuant,
    Quantize,
    Spectrum,
    Hvz,
    Convergence,
    ProbeScattering,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::LambdaQuant => "lambda-quant",
            Self::Quantize => "quantize",
            Self::Spectrum => "spectrum",
            Self::Hvz => "hvz",
            Self::Convergence => "convergence",
            Self::ProbeScattering => "probe-scattering",
            Self::Validate => "validate",
        }
    }
}

pub struct Outcome {
    pub report: Value,
    pub trace: Option<Trace>,
}

pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let r = cfg.validate()?;
    match cmd {
        Command::Validate => validate(cfg, &r),
        Command::LambdaQuant => lambda_quant_cmd(cfg, &r),
        Command::Quantize => quantize_cmd(cfg, &r),
        Command::Spectrum => spectrum(cfg, &r),
        Command::Hvz => hvz(cfg, &r),
        Command::Convergence => convergence(cfg, &r),
        Command::ProbeScattering => probe(cfg, &r),
    }
}

fn lattice_json(l: &MomentumLattice<f64>) -> Value {
    json!({ "v": l.v().to_string(), "kappa": num(l.kappa()), "modes": l.len() })
}

fn basis_for(cfg: &ExperimentConfig, l: &MomentumLattice<f64>) -> CliResult<FockBasis> {
    Ok(FockBasis::new(l.len(), cfg.fock.n_max, cfg.fock.dimension_cap)?)
}

fn bundle_for(cfg: &ExperimentConfig, r: &Resolved, l: &MomentumLattice<f64>) -> CliResult<HamiltonianBundle<f64>> {
    let basis = basis_for(cfg, l)?;
    let opts = AssemblyOptions { override_stability: cfg.override_stability };
    let b = assemble(&r.interaction, &r.potential, cfg.coupling.lambda, &basis, l, opts)?;
    let meta = bundle_meta(&b);
    eprintln!(
        "assembled v={} kappa={} n_max={}: dim {} nnz {} diagonal [{}, {}]",
        l.v(),
        l.kappa(),
        cfg.fock.n_max,
        meta["dim"],
        meta["nnz"],
        meta["diagonal_min"],
        meta["diagonal_max"]
    );
    Ok(b)
}

fn bundle_meta(b: &HamiltonianBundle<f64>) -> Value {
    let d = b.h.matrix.diagonal_real();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "dim": b.dim(),
        "nnz": b.h.matrix.nnz(),
        "n_max": b.basis.n_max(),
        "diagonal_min": num(lo),
        "diagonal_max": num(hi),
        "lattice": lattice_json(&b.lattice),
    })
}

fn validate(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let mut levels = Vec::new();
    for l in &r.lattices {
        let basis = basis_for(cfg, l)?;
        levels.push(json!({ "lattice": lattice_json(l), "fock_dim": basis.dim() }));
    }
    let cert = r.interaction.certificate().map(|c| json!({ "degree": c.degree, "leading_form_min": num(c.min_value) }));
    let report = json!({
        "levels": levels,
        "interaction_certificate": cert.unwrap_or(Value::Null),
        "override_stability": cfg.override_stability,
    });
    Ok(Outcome { report, trace: None })
}

fn lambda_quant_cmd(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let lambda = cfg.coupling.lambda;
    let mut records = Vec::new();
    let mut trace = Trace::new(&["v", "kappa", "modes", "c0", "c1", "lambda_quant", "min_eig_omega"]);
    for l in &r.lattices {
        let rep = lambda_quant(&r.potential, l)?;
        let lq = rep.lambda_quant.to_f64();
        let omega = omega_block(lambda, &r.potential, l).min_eigenvalue();
        records.push(json!({
            "c0": num(rep.c0),
            "c1": num(rep.c1),
            "lambda_quant": num(lq),
            "lattice": lattice_json(l),
            "min_eig_omega": num(omega),
        }));
        trace.push(vec![
            l.v().to_string(),
            cell(l.kappa()),
            l.len().to_string(),
            cell(rep.c0),
            cell(rep.c1),
            if lq.is_finite() { cell(lq) } else { "inf".into() },
            cell(omega),
        ]);
    }
    let first = records[0].clone();
    let report = json!({
        "c0": first["c0"],
        "c1": first["c1"],
        "lambda_quant": first["lambda_quant"],
        "lattice": first["lattice"],
        "min_eig_omega": first["min_eig_omega"],
        "coupling": num(lambda),
        "levels": records,
    });
    Ok(Outcome { report, trace: Some(trace) })
}

fn quantize_cmd(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let q = &cfg.quantization;
    let grid = PhaseSpaceGrid::from_potential(q.points, q.dx, cfg.lattice.mass, &r.potential)?;
    let (_, rep) = quantize(&grid)?;
    let report = json!({
        "delta": num(rep.delta),
        "min_spec_hV": num(rep.min_spec_h),
        "j_square_residual": num(rep.j_square_residual),
        "reconstruction_residual": num(rep.reconstruction_residual),
        "free_check_error": num(rep.free_check_error),
        "grid": { "points": q.points, "dx": num(q.dx), "mass": num(cfg.lattice.mass) },
    });
    Ok(Outcome { report, trace: None })
}

fn spectrum(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let b = bundle_for(cfg, r, r.base())?;
    let pairs = lowest_eigenpairs(&b.h, cfg.solver.report_depth + 1, &r.spectral)?;
    let mut trace = Trace::new(&["index", "eigenvalue", "residual"]);
    for (i, (e, res)) in pairs.values.iter().zip(&pairs.residuals).enumerate() {
        trace.push(vec![i.to_string(), cell(*e), cell(*res)]);
    }
    let gap = if pairs.values.len() > 1 { pairs.values[1] - pairs.values[0] } else { 0.0 };
    let report = json!({
        "e0": num(pairs.values[0]),
        "eigenvalues": nums(&pairs.values),
        "residuals": nums(&pairs.residuals),
        "gap": num(gap),
        "lambda_quant": num(b.coupling.lambda_quant.to_f64()),
        "bundle": bundle_meta(&b),
    });
    Ok(Outcome { report, trace: Some(trace) })
}

fn hvz(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let mass = cfg.lattice.mass;
    let mut levels = Vec::new();
    let mut trace = Trace::new(&["v", "kappa", "dim", "e0", "gap", "hvz_onset", "onset_offset", "onset_overlap"]);
    for l in &r.lattices {
        let b = bundle_for(cfg, r, l)?;
        let rep = hvz_gap_probe(&b, cfg.solver.report_depth, &r.spectral)?;
        let onset = rep.hvz_onset.unwrap_or(f64::NAN);
        let offset = rep.onset_offset(mass).unwrap_or(f64::NAN);
        let overlap = rep.onset_overlap.unwrap_or(f64::NAN);
        trace.push(vec![
            l.v().to_string(),
            cell(l.kappa()),
            b.dim().to_string(),
            cell(rep.e0),
            cell(rep.gap),
            cell(onset),
            cell(offset),
            cell(overlap),
        ]);
        levels.push(json!({
            "e0": num(rep.e0),
            "eigenvalues": nums(&rep.eigenvalues),
            "residuals": nums(&rep.residuals),
            "gap": num(rep.gap),
            "hvz_onset": rep.hvz_onset.map(num).unwrap_or(Value::Null),
            "onset_offset": rep.onset_offset(mass).map(num).unwrap_or(Value::Null),
            "onset_overlap": rep.onset_overlap.map(num).unwrap_or(Value::Null),
            "bundle": bundle_meta(&b),
        }));
    }
    let offsets: Vec<Value> = levels.iter().map(|l| l["onset_offset"].clone()).collect();
    let report = json!({
        "e0": levels[0]["e0"],
        "gap": levels[0]["gap"],
        "hvz_onset": levels[0]["hvz_onset"],
        "onset_offset": offsets,
        "levels": levels,
    });
    Ok(Outcome { report, trace: Some(trace) })
}

fn convergence(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    if r.lattices.len() < 2 {
        return Err(CliError::Config("convergence needs lattice.refinement_levels >= 2".into()));
    }
    let bundles = r.lattices.iter().map(|l| bundle_for(cfg, r, l)).collect::<CliResult<Vec<_>>>()?;
    let beta = match cfg.solver.beta {
        Some(b) => b,
        None => default_shift(&bundles[0], &r.spectral)?,
    };
    let trace = resolvent_convergence(&bundles, &r.pairs()?, beta, &r.spectral)?;
    let norms = higher_order_probe(&bundles, beta, &r.spectral)?;
    let mut csv = Trace::new(&["v", "kappa", "dim", "e0", "resolvent_gap_to_next", "number_resolvent_norm"]);
    for (i, (&(_, kappa, dim), e0)) in trace.levels.iter().zip(&trace.e0_trace).enumerate() {
        let gap = trace.resolvent_gaps.get(i).map(|g| cell(*g)).unwrap_or_default();
        csv.push(vec![r.lattices[i].v().to_string(), cell(kappa), dim.to_string(), cell(*e0), gap, cell(norms[i])]);
    }
    let report = json!({
        "beta": num(beta),
        "e0": nums(&trace.e0_trace),
        "resolvent_gaps": nums(&trace.resolvent_gaps),
        "strictly_decreasing": trace.strictly_decreasing(),
        "number_resolvent_norms": nums(&norms),
        "number_resolvent_spread": num(relative_spread(&norms)),
        "levels": r.lattices.iter().zip(&bundles).map(|(l, b)| json!({ "lattice": lattice_json(l), "dim": b.dim() })).collect::<Vec<_>>(),
    });
    Ok(Outcome { report, trace: Some(csv) })
}

/// Normalized Gaussian packet on one species, zero on the other (length `2M`).
pub fn wave_packet(l: &MomentumLattice<f64>, species: Species, k0: f64, sigma: f64) -> Vec<Complex<f64>> {
    let m = l.len();
    let mut f = vec![Complex::new(0.0, 0.0); 2 * m];
    let off = species.index() * m;
    for (i, &k) in l.momenta().iter().enumerate() {
        f[off + i] = Complex::new((-(k - k0).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0);
    }
    normalize(&mut f);
    f
}

fn probe(cfg: &ExperimentConfig, r: &Resolved) -> CliResult<Outcome> {
    let p = &cfg.probe;
    let b = bundle_for(cfg, r, r.base())?;
    let species = if p.species == 1 { Species::One } else { Species::Two };
    let f = wave_packet(r.base(), species, p.k0, p.sigma);
    if f.iter().all(|z| z.norm() == 0.0) || f.iter().any(|z| !z.re.is_finite()) {
        return Err(CliError::Config("probe packet vanishes on the lattice".into()));
    }
    let (e0, psi) = ground_state(&b.h, &r.spectral)?;
    let res = heisenberg_probe(&b, &r.potential, &f, &p.times, &psi)?;
    let mut trace = Trace::new(&["t", "re", "im", "trusted"]);
    for ((t, z), ok) in res.times.iter().zip(&res.values).zip(&res.trusted) {
        trace.push(vec![cell(*t), cell(z.re), cell(z.im), ok.to_string()]);
    }
    let report = json!({
        "e0": num(e0),
        "times": nums(&res.times),
        "values": res.values.iter().map(|z| json!([num(z.re), num(z.im)])).collect::<Vec<_>>(),
        "cauchy_differences": nums(&res.cauchy_differences()),
        "recurrence_time": num(res.recurrence_time),
        "trusted": res.trusted,
        "bundle": bundle_meta(&b),
    });
    Ok(Outcome { report, trace: Some(trace) })
}
