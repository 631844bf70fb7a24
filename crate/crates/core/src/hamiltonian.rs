//! Cutoff Hamiltonians `H = H₀ + H_I + λ Q` on a truncated Fock space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{dgamma, dgamma_diagonal, wick_operator, FockBasis, FockOperator, Species, WickKernel};
use crate::lattice::{MomentumLattice, NestedPair};
use crate::oneparticle::{b_matrix, lambda_quant, omega_block, pair_kernel, CouplingReport, Potential, SpaceCutoff};
use crate::scalar::{creal, czero, lit, Complex, Real};
use crate::sparse::CsrMatrix;

/// Number of equispaced angles sampled by the bounded-below certificate.
const CERTIFICATE_SAMPLES: usize = 4096;

/// Term `a φ₁^{α₁} φ₂^{α₂}` of the interaction polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial<T> {
    pub alpha1: usize,
    pub alpha2: usize,
    pub coeff: T,
}

impl<T> Monomial<T> {
    pub fn new(alpha1: usize, alpha2: usize, coeff: T) -> Self {
        Self { alpha1, alpha2, coeff }
    }

    pub fn degree(&self) -> usize {
        self.alpha1 + self.alpha2
    }
}

/// Minimum over the unit circle of the top-degree part of `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedBelowCertificate<T> {
    pub degree: usize,
    pub min_value: T,
    pub argmin: T,
}

/// Polynomial `P(φ₁, φ₂)` together with the spatial cutoff `g`.
#[derive(Debug, Clone)]
pub struct InteractionSpec<T: Real> {
    monomials: Vec<Monomial<T>>,
    cutoff: SpaceCutoff<T>,
    certificate: Option<BoundedBelowCertificate<T>>,
}

impl<T: Real> InteractionSpec<T> {
    /// Validates the polynomial; an empty list means no interaction.
    pub fn new(monomials: Vec<Monomial<T>>, cutoff: SpaceCutoff<T>) -> Result<Self> {
        let monomials: Vec<_> = monomials.into_iter().filter(|m| m.coeff != T::zero()).collect();
        for x in (-200..=200).map(|i| lit::<T>(i as f64 * 0.1)) {
            if cutoff.value(x) < T::zero() {
                return Err(Error::Contract(format!("cutoff g is negative at x = {x}")));
            }
        }
        let certificate = if monomials.is_empty() { None } else { Some(certify(&monomials)?) };
        Ok(Self { monomials, cutoff, certificate })
    }

    /// No interaction.
    pub fn free() -> Self {
        Self { monomials: Vec::new(), cutoff: SpaceCutoff::Zero, certificate: None }
    }

    pub fn monomials(&self) -> &[Monomial<T>] {
        &self.monomials
    }

    pub fn cutoff(&self) -> &SpaceCutoff<T> {
        &self.cutoff
    }

    pub fn certificate(&self) -> Option<&BoundedBelowCertificate<T>> {
        self.certificate.as_ref()
    }

    pub fn is_trivial(&self) -> bool {
        self.monomials.is_empty() || self.cutoff.is_zero()
    }
}

fn leading_form<T: Real>(top: &[Monomial<T>], theta: T) -> (T, T) {
    let (c, s) = (theta.cos(), theta.sin());
    let mut f = T::zero();
    let mut df = T::zero();
    for m in top {
        let a1 = m.alpha1 as i32;
        let a2 = m.alpha2 as i32;
        f += m.coeff * c.powi(a1) * s.powi(a2);
        // d/dθ cos^a sin^b = -a cos^{a-1} sin^{b+1} + b cos^{a+1} sin^{b-1}
        let t1 = if a1 > 0 { -lit::<T>(a1 as f64) * c.powi(a1 - 1) * s.powi(a2 + 1) } else { T::zero() };
        let t2 = if a2 > 0 { lit::<T>(a2 as f64) * c.powi(a1 + 1) * s.powi(a2 - 1) } else { T::zero() };
        df += m.coeff * (t1 + t2);
    }
    (f, df)
}

/// Checks that the degree is even and the top-degree form is positive on the circle.
///
/// The form is sampled on a dense grid; every sign change of its derivative
/// is refined by bisection so interior minima are located precisely.
fn certify<T: Real>(monomials: &[Monomial<T>]) -> Result<BoundedBelowCertificate<T>> {
    let degree = monomials.iter().map(|m| m.degree()).max().unwrap_or(0);
    if degree == 0 || degree % 2 != 0 {
        return Err(Error::Contract(format!("polynomial degree {degree} is not positive and even")));
    }
    let top: Vec<_> = monomials.iter().copied().filter(|m| m.degree() == degree).collect();
    let step = T::two_pi() / lit(CERTIFICATE_SAMPLES as f64);
    let mut best = (T::max_value().unwrap_or_else(T::one), T::zero());
    let mut prev: Option<(T, T)> = None;
    for i in 0..=CERTIFICATE_SAMPLES {
        let theta = step * lit(i as f64);
        let (f, df) = leading_form(&top, theta);
        if f < best.0 {
            best = (f, theta);
        }
        if let Some((t0, d0)) = prev {
            if d0 < T::zero() && df >= T::zero() {
                let (mut lo, mut hi) = (t0, theta);
                for _ in 0..60 {
                    let mid = (lo + hi) * lit(0.5);
                    if leading_form(&top, mid).1 < T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t = (lo + hi) * lit(0.5);
                let fm = leading_form(&top, t).0;
                if fm < best.0 {
                    best = (fm, t);
                }
            }
        }
        prev = Some((theta, df));
    }
    let cert = BoundedBelowCertificate { degree, min_value: best.0, argmin: best.1 };
    // a minimum at round-off level is a zero of the form, not a positive bound
    let scale = top.iter().fold(T::zero(), |s, m| s.max(m.coeff.abs()));
    if !(cert.min_value > lit::<T>(1e-12) * scale) {
        return Err(Error::Contract(format!(
            "polynomial is not bounded below: leading form reaches {} at angle {}",
            cert.min_value, cert.argmin
        )));
    }
    Ok(cert)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normal-ordered Wick kernels of `∫ g(x) :P(φ₁(x), φ₂(x)): dx` on the lattice.
///
/// A monomial `a φ₁^{α₁} φ₂^{α₂}` contributes, for every split into `p`
/// creators and `q` annihilators,
/// `a C(α₁,p₁) C(α₂,p₂) (4π)^{-|α|/2} g^(Σk - Σk') Π ε^{-1/2} v^{-|α|/2}`.
pub fn interaction_kernels<T: Real>(spec: &InteractionSpec<T>, lattice: &MomentumLattice<T>) -> Vec<WickKernel<T>> {
    let m = lattice.len();
    let g = spec.cutoff();
    let mut out = Vec::new();
    for mono in spec.monomials() {
        let deg = mono.degree();
        if deg == 0 {
            let c = if g.is_zero() { czero() } else { g.fourier(T::zero()) * mono.coeff };
            out.push(WickKernel::constant(c, m));
            continue;
        }
        let jmax = lattice.jmax();
        let span = deg as i64 * 2 * jmax;
        // g^ as a function of the summed label Σj - Σj'
        let table: Vec<Complex<T>> =
            (-span..=span).map(|l| g.fourier(lattice.momentum_of_label(l))).collect();
        let eps_mhalf: Vec<T> = lattice.eps().iter().map(|e| e.sqrt().recip()).collect();
        let base = mono.coeff
            * (T::two_pi() * lit(2.0)).powf(-lit::<T>(deg as f64) * lit(0.5))
            * lattice.v_real().powf(-lit::<T>(deg as f64) * lit(0.5));
        for p1 in 0..=mono.alpha1 {
            for p2 in 0..=mono.alpha2 {
                let p = p1 + p2;
                let q = deg - p;
                let species: Vec<Species> = std::iter::repeat_n(Species::One, p1)
                    .chain(std::iter::repeat_n(Species::Two, p2))
                    .chain(std::iter::repeat_n(Species::One, mono.alpha1 - p1))
                    .chain(std::iter::repeat_n(Species::Two, mono.alpha2 - p2))
                    .collect();
                let mut kern = WickKernel::zeros(p, q, species, m).expect("kernel fits in memory");
                let pref = base * lit(binomial(mono.alpha1, p1) * binomial(mono.alpha2, p2));
                let coeffs: Vec<Complex<T>> = (0..kern.coeffs.len())
                    .into_par_iter()
                    .map(|flat| {
                        let idx = kern.multi_index(flat);
                        let mut label = 0i64;
                        let mut weight = pref;
                        for (slot, &k) in idx.iter().enumerate() {
                            let j = k as i64 - jmax;
                            label += if slot < p { j } else { -j };
                            weight *= eps_mhalf[k];
                        }
                        table[(label + span) as usize] * weight
                    })
                    .collect();
                kern.coeffs = coeffs;
                out.push(kern.symmetrize());
            }
        }
    }
    out
}

/// Wick-ordered interaction `H_I` as an exactly Hermitian operator.
pub fn interaction_operator<T: Real>(spec: &InteractionSpec<T>, basis: &FockBasis, lattice: &MomentumLattice<T>) -> Result<FockOperator<T>> {
    let dim = basis.dim();
    let mut acc = CsrMatrix::zeros(dim, dim);
    if spec.is_trivial() {
        return Ok(FockOperator::new(acc, true));
    }
    for kern in interaction_kernels(spec, lattice) {
        acc = acc.add(&wick_operator(basis, &kern)?.matrix);
    }
    Ok(FockOperator::new(acc, false).hermitian_part())
}

/// `H₀ = dΓ(ε ⊕ ε)`.
pub fn free_hamiltonian<T: Real>(basis: &FockBasis, lattice: &MomentumLattice<T>) -> Result<FockOperator<T>> {
    if basis.modes() != lattice.len() {
        return Err(Error::Shape { expected: lattice.len(), got: basis.modes() });
    }
    let w: Vec<T> = lattice.eps().iter().chain(lattice.eps()).copied().collect();
    dgamma_diagonal(basis, &w)
}

/// The three parts of the local charge operator.
#[derive(Debug, Clone)]
pub struct ChargeParts<T: Real> {
    /// `dΓ([[0, b], [b†, 0]])`
    pub dgamma: FockOperator<T>,
    /// `Σ R_{γγ'} a₁*(γ) a₂*(γ')`
    pub pair_create: FockOperator<T>,
    /// Adjoint of `pair_create`.
    pub pair_annih: FockOperator<T>,
}

impl<T: Real> ChargeParts<T> {
    pub fn total(&self) -> FockOperator<T> {
        let m = self.dgamma.matrix.add(&self.pair_create.matrix).add(&self.pair_annih.matrix);
        FockOperator::new(m, false).hermitian_part()
    }
}

fn off_diagonal_block<T: Real>(b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let m = b.nrows();
    let bh = b.adjoint();
    DMatrix::from_fn(2 * m, 2 * m, |r, c| match (r < m, c < m) {
        (true, false) => b[(r, c - m)],
        (false, true) => bh[(r - m, c)],
        _ => czero(),
    })
}

pub fn charge_operator<T: Real>(potential: &Potential<T>, basis: &FockBasis, lattice: &MomentumLattice<T>) -> Result<ChargeParts<T>> {
    let m = lattice.len();
    if basis.modes() != m {
        return Err(Error::Shape { expected: m, got: basis.modes() });
    }
    let b = b_matrix(potential, lattice);
    let qd = dgamma(basis, &off_diagonal_block(&b))?;
    let r = pair_kernel(potential, lattice);
    let mut kern = WickKernel::zeros(2, 0, vec![Species::One, Species::Two], m)?;
    for i in 0..m {
        for j in 0..m {
            kern.coeffs[i * m + j] = r.matrix()[(i, j)];
        }
    }
    let create = wick_operator(basis, &kern)?;
    let annih = create.adjoint();
    Ok(ChargeParts { dgamma: qd, pair_create: create, pair_annih: FockOperator::new(annih.matrix, false) })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    /// Allow `|λ| >= λ_quant` (exploration mode).
    pub override_stability: bool,
}

/// All pieces of `H = H₀ + H_I + λ Q`.
#[derive(Debug, Clone)]
pub struct HamiltonianBundle<T: Real> {
    pub basis: FockBasis,
    pub lattice: MomentumLattice<T>,
    pub lambda: T,
    pub coupling: CouplingReport<T>,
    pub h0: FockOperator<T>,
    pub hi: FockOperator<T>,
    pub charge: ChargeParts<T>,
    pub h: FockOperator<T>,
}

pub fn assemble<T: Real>(
    spec: &InteractionSpec<T>,
    potential: &Potential<T>,
    lambda: T,
    basis: &FockBasis,
    lattice: &MomentumLattice<T>,
    options: AssemblyOptions,
) -> Result<HamiltonianBundle<T>> {
    let coupling = lambda_quant(potential, lattice)?;
    if !options.override_stability && !coupling.lambda_quant.admits(lambda) {
        return Err(Error::Stability {
            lambda: crate::scalar::to_f64(lambda),
            lambda_quant: coupling.lambda_quant.to_f64(),
        });
    }
    let h0 = free_hamiltonian(basis, lattice)?;
    let hi = interaction_operator(spec, basis, lattice)?;
    let charge = charge_operator(potential, basis, lattice)?;
    let q = charge.dgamma.matrix.add(&charge.pair_create.matrix).add(&charge.pair_annih.matrix);
    let h = h0.matrix.add(&hi.matrix).add_scaled(&q, creal(lambda));
    let h = FockOperator::new(h, false).hermitian_part();
    Ok(HamiltonianBundle { basis: basis.clone(), lattice: lattice.clone(), lambda, coupling, h0, hi, charge, h })
}

impl<T: Real> HamiltonianBundle<T> {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `Q = Q^{a*a} + Q^{a*a*} + Q^{aa}`.
    pub fn charge_total(&self) -> FockOperator<T> {
        self.charge.total()
    }

    /// Same Hamiltonian grouped as `dΓ(ω_{λV}) + λ(Q^{a*a*} + Q^{aa}) + H_I`.
    pub fn alternate_assembly(&self, potential: &Potential<T>) -> Result<FockOperator<T>> {
        let omega = omega_block(self.lambda, potential, &self.lattice).matrix();
        let dg = dgamma(&self.basis, &omega)?;
        let pairs = self.charge.pair_create.matrix.add(&self.charge.pair_annih.matrix);
        let h = dg.matrix.add_scaled(&pairs, creal(self.lambda)).add(&self.hi.matrix);
        Ok(FockOperator::new(h, false).hermitian_part())
    }

    /// `δ H₀ + C + s λ Q` with the constructive constants, `s = ±1`.
    pub fn form_bound_operator(&self, sign: T) -> FockOperator<T> {
        let (delta, c) = self.coupling.form_bound(self.lambda);
        let id = CsrMatrix::identity(self.dim());
        let q = self.charge_total().matrix;
        let m = self.h0.matrix.scale_real(delta).add_scaled(&id, creal(c)).add_scaled(&q, creal(sign * self.lambda));
        FockOperator::new(m, false).hermitian_part()
    }

    /// Vacuum expectation `<Ω|A|Ω>`; the vacuum is basis state 0.
    pub fn vacuum_expectation(op: &FockOperator<T>) -> Complex<T> {
        op.matrix.get(0, 0)
    }
}

/// `Π` restricted to the coarse Fock space: embed coarse occupations into the
/// fine basis through the mode injection and compress.
pub fn compress<T: Real>(
    pair: &NestedPair<T>,
    fine_op: &FockOperator<T>,
    fine_basis: &FockBasis,
    coarse_basis: &FockBasis,
) -> Result<FockOperator<T>> {
    if fine_basis.modes() != pair.fine().len() || coarse_basis.modes() != pair.coarse().len() {
        return Err(Error::Parameter("bases do not match the nested lattices".into()));
    }
    if fine_op.dim() != fine_basis.dim() {
        return Err(Error::Shape { expected: fine_basis.dim(), got: fine_op.dim() });
    }
    let idx = fine_basis.embedding_indices(coarse_basis, pair.mode_injection())?;
    Ok(FockOperator::new(fine_op.matrix.submatrix(&idx, &idx), fine_op.hermitian))
}

/// Dense counterpart of [`compress`] for matrices such as resolvents.
pub fn compress_dense<T: Real>(
    pair: &NestedPair<T>,
    fine: &DMatrix<Complex<T>>,
    fine_basis: &FockBasis,
    coarse_basis: &FockBasis,
) -> Result<DMatrix<Complex<T>>> {
    let idx = fine_basis.embedding_indices(coarse_basis, pair.mode_injection())?;
    Ok(DMatrix::from_fn(idx.len(), idx.len(), |i, j| fine[(idx[i], idx[j])]))
}
