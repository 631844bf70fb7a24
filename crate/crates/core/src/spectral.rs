//! Eigenvalue experiments on cutoff Hamiltonians: ground states, the onset of
//! the one-particle branch, resolvent convergence across nested cutoffs, and
//! the Heisenberg-picture field probe.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{smeared_creation, FockBasis, FockOperator, Species};
use crate::hamiltonian::HamiltonianBundle;
use crate::lattice::NestedPair;
use crate::linalg::{
    conjugate_gradient, dot, lanczos_extreme, norm, normalize, Extreme, LanczosOptions, SpectralDecomposition,
};
use crate::oneparticle::{omega_block, Potential};
use crate::scalar::{cis, creal, czero, lit, to_f64, Complex, Real};
use crate::sparse::CsrMatrix;

/// Overlap with the one-extra-particle span that marks the branch onset.
pub const ONSET_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions<T> {
    /// Dense eigensolves below this dimension, Lanczos at or above.
    pub dense_limit: usize,
    pub lanczos: LanczosOptions<T>,
    /// Conjugate-gradient tolerance for shifted solves.
    pub cg_tol: T,
    pub cg_max_iter: usize,
    /// Eigenpairs searched for the branch onset on the Lanczos path.
    pub onset_search: usize,
}

impl<T: Real> Default for SpectralOptions<T> {
    fn default() -> Self {
        Self {
            dense_limit: 4000,
            lanczos: LanczosOptions::default(),
            cg_tol: lit(1e-12),
            cg_max_iter: 5000,
            onset_search: 24,
        }
    }
}

/// Low-lying eigenpairs with their residuals `‖Hψ - Eψ‖`.
#[derive(Debug, Clone)]
pub struct Eigenpairs<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
    pub residuals: Vec<T>,
}

fn residual<T: Real>(h: &CsrMatrix<T>, e: T, v: &[Complex<T>]) -> T {
    let hv = h.mul_vec(v);
    norm(&hv.iter().zip(v).map(|(a, b)| a - b * creal(e)).collect::<Vec<_>>())
}

fn check_residuals<T: Real>(pairs: &Eigenpairs<T>) -> Result<()> {
    let tol = lit::<T>(1e-8).max(T::default_epsilon() * lit(1e3));
    for (e, r) in pairs.values.iter().zip(&pairs.residuals) {
        if *r > tol * T::one().max(e.abs()) {
            return Err(Error::Solver { residual: to_f64(*r), iterations: 0 });
        }
    }
    Ok(())
}

/// Row-sum bound on the spectral radius.
fn gershgorin<T: Real>(h: &CsrMatrix<T>) -> T {
    (0..h.nrows()).fold(T::zero(), |m, r| {
        let (_, vals) = h.row(r);
        m.max(vals.iter().fold(T::zero(), |s, z| s + crate::scalar::cabs(*z)))
    })
}

/// The `count` lowest eigenpairs, ascending.
///
/// Diagonal operators are handled exactly; dense eigensolves are used below
/// `dense_limit`, deflated Lanczos above.
pub fn lowest_eigenpairs<T: Real>(h: &FockOperator<T>, count: usize, opts: &SpectralOptions<T>) -> Result<Eigenpairs<T>> {
    let dim = h.dim();
    let count = count.min(dim);
    let (values, vectors) = if h.matrix.is_diagonal() || dim < opts.dense_limit {
        let sd = SpectralDecomposition::of_sparse(&h.matrix);
        let values = sd.values[..count].to_vec();
        let vectors = (0..count).map(|k| sd.vector(k)).collect();
        (values, vectors)
    } else {
        let shift = gershgorin(&h.matrix) * lit(2.0) + T::one();
        let mut values = Vec::with_capacity(count);
        let mut vectors: Vec<Vec<Complex<T>>> = Vec::with_capacity(count);
        for k in 0..count {
            let found = &vectors;
            let apply = |x: &[Complex<T>]| {
                let mut y = h.matrix.mul_vec(x);
                for v in found.iter() {
                    let c = dot(v, x) * creal(shift);
                    crate::linalg::axpy(&mut y, c, v);
                }
                y
            };
            let lopts = LanczosOptions { seed: opts.lanczos.seed.wrapping_add(k as u64), ..opts.lanczos };
            let (e, mut v, _) = lanczos_extreme(apply, dim, Extreme::Smallest, &lopts)?;
            // keep the deflation basis orthonormal
            for u in &vectors {
                let c = dot(u, &v);
                crate::linalg::axpy(&mut v, -c, u);
            }
            normalize(&mut v);
            values.push(e);
            vectors.push(v);
        }
        (values, vectors)
    };
    let residuals = values.iter().zip(&vectors).map(|(e, v)| residual(&h.matrix, *e, v)).collect();
    let pairs = Eigenpairs { values, vectors, residuals };
    check_residuals(&pairs)?;
    Ok(pairs)
}

/// Lowest eigenpair `(E₀, ψ₀)`.
pub fn ground_state<T: Real>(h: &FockOperator<T>, opts: &SpectralOptions<T>) -> Result<(T, Vec<Complex<T>>)> {
    let mut p = lowest_eigenpairs(h, 1, opts)?;
    Ok((p.values[0], p.vectors.swap_remove(0)))
}

#[derive(Debug, Clone)]
pub struct SpectralReport<T> {
    pub e0: T,
    /// `report_depth + 1` lowest eigenvalues.
    pub eigenvalues: Vec<T>,
    pub gap: T,
    /// Lowest eigenvalue whose eigenvector lies mostly in `span{a*_s ψ₀}`.
    pub hvz_onset: Option<T>,
    /// Overlap weight of the onset eigenvector with that span.
    pub onset_overlap: Option<T>,
    pub residuals: Vec<T>,
}

impl<T: Real> SpectralReport<T> {
    /// `onset - (E₀ + m)`.
    pub fn onset_offset(&self, mass: T) -> Option<T> {
        self.hvz_onset.map(|o| o - (self.e0 + mass))
    }
}

/// Orthonormal basis of `span{a*_s ψ₀ : every slot s}`.
fn one_extra_particle_span<T: Real>(basis: &FockBasis, psi0: &[Complex<T>]) -> Vec<Vec<Complex<T>>> {
    let mut span: Vec<Vec<Complex<T>>> = Vec::new();
    for sp in Species::BOTH {
        for mode in 0..basis.modes() {
            let mut f = vec![czero::<T>(); basis.modes()];
            f[mode] = creal(T::one());
            let mut v = smeared_creation(basis, sp, &f).apply(psi0);
            let n0 = norm(&v);
            for _ in 0..2 {
                for u in &span {
                    let c = dot(u, &v);
                    crate::linalg::axpy(&mut v, -c, u);
                }
            }
            if norm(&v) > lit::<T>(1e-8) * n0.max(lit(1e-300)) && norm(&v) > lit(1e-12) {
                normalize(&mut v);
                span.push(v);
            }
        }
    }
    span
}

/// Low-lying spectrum with the overlap diagnostic for the one-particle branch.
pub fn hvz_gap_probe<T: Real>(bundle: &HamiltonianBundle<T>, report_depth: usize, opts: &SpectralOptions<T>) -> Result<SpectralReport<T>> {
    let dim = bundle.dim();
    let search = if dim < opts.dense_limit || bundle.h.matrix.is_diagonal() {
        dim
    } else {
        opts.onset_search.max(report_depth + 1)
    };
    let pairs = lowest_eigenpairs(&bundle.h, search, opts)?;
    let e0 = pairs.values[0];
    let span = one_extra_particle_span(&bundle.basis, &pairs.vectors[0]);
    let mut onset = None;
    let mut overlap = None;
    for k in 1..pairs.values.len() {
        let w = span.iter().fold(T::zero(), |s, u| s + crate::scalar::abs2(dot(u, &pairs.vectors[k])));
        if w >= lit(ONSET_OVERLAP) {
            onset = Some(pairs.values[k]);
            overlap = Some(w);
            break;
        }
    }
    let depth = (report_depth + 1).min(pairs.values.len());
    let eigenvalues = pairs.values[..depth].to_vec();
    let gap = if eigenvalues.len() > 1 { eigenvalues[1] - e0 } else { T::zero() };
    Ok(SpectralReport {
        e0,
        eigenvalues,
        gap,
        hvz_onset: onset,
        onset_overlap: overlap,
        residuals: pairs.residuals[..depth].to_vec(),
    })
}

/// Resolvent `(H + β)^{-1}`: a spectral decomposition when small, conjugate gradients otherwise.
enum Resolvent<'a, T: Real> {
    Spectral(SpectralDecomposition<T>, T),
    Iterative { h: &'a CsrMatrix<T>, beta: T, tol: T, max_iter: usize },
}

impl<'a, T: Real> Resolvent<'a, T> {
    fn new(h: &'a FockOperator<T>, beta: T, opts: &SpectralOptions<T>) -> Result<Self> {
        if h.dim() < opts.dense_limit || h.matrix.is_diagonal() {
            let sd = SpectralDecomposition::of_sparse(&h.matrix);
            check_shift(sd.values[0], beta)?;
            Ok(Self::Spectral(sd, beta))
        } else {
            let (e0, _) = ground_state(h, opts)?;
            check_shift(e0, beta)?;
            Ok(Self::Iterative { h: &h.matrix, beta, tol: opts.cg_tol, max_iter: opts.cg_max_iter })
        }
    }

    fn apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        match self {
            Self::Spectral(sd, beta) => Ok(sd.apply_function(|l| creal((l + *beta).recip()), x)),
            Self::Iterative { h, beta, tol, max_iter } => conjugate_gradient(
                |v| {
                    let mut y = h.mul_vec(v);
                    crate::linalg::axpy(&mut y, creal(*beta), v);
                    y
                },
                x,
                *tol,
                *max_iter,
            ),
        }
    }

    /// Dense block on the given indices, when available.
    fn block(&self, idx: &[usize]) -> Option<DMatrix<Complex<T>>> {
        match self {
            Self::Spectral(sd, beta) => Some(sd.compressed_function(idx, |l| creal((l + *beta).recip()))),
            Self::Iterative { .. } => None,
        }
    }
}

fn check_shift<T: Real>(e0: T, beta: T) -> Result<()> {
    if !(e0 + beta > T::zero()) {
        return Err(Error::Parameter(format!("resolvent shift {beta} does not exceed -inf spec = {}", -e0)));
    }
    Ok(())
}

/// Norm of a Hermitian map known only through matrix-vector products.
fn hermitian_map_norm<T, F>(apply: F, dim: usize, opts: &SpectralOptions<T>) -> Result<T>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Result<Vec<Complex<T>>>,
{
    if dim <= 300 {
        let mut m = DMatrix::from_element(dim, dim, czero::<T>());
        for j in 0..dim {
            let mut e = vec![czero::<T>(); dim];
            e[j] = creal(T::one());
            let col = apply(&e)?;
            for i in 0..dim {
                m[(i, j)] = col[i];
            }
        }
        let m = (&m + m.adjoint()) * creal(lit::<T>(0.5));
        return Ok(crate::linalg::hermitian_norm_dense(&m));
    }
    let failure = std::cell::RefCell::new(None);
    let wrapped = |x: &[Complex<T>]| match apply(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            vec![czero(); x.len()]
        }
    };
    let (hi, _, _) = lanczos_extreme(wrapped, dim, Extreme::Largest, &opts.lanczos)?;
    let (lo, _, _) = lanczos_extreme(wrapped, dim, Extreme::Smallest, &opts.lanczos)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(hi.abs().max(lo.abs()))
}

/// Resolvent differences and ground energies across a nested sequence.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace<T> {
    /// `(v, kappa, basis dimension)` per level.
    pub levels: Vec<(f64, f64, usize)>,
    /// `‖(H_c + β)^{-1} - Π (H_f + β)^{-1} Π*‖` for each adjacent pair.
    pub resolvent_gaps: Vec<T>,
    pub e0_trace: Vec<T>,
    pub beta: T,
}

impl<T: Real> ConvergenceTrace<T> {
    /// Strict decrease over the whole sequence.
    pub fn strictly_decreasing(&self) -> bool {
        self.resolvent_gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// `β = 1 + |inf spec H|` at the coarsest level.
pub fn default_shift<T: Real>(coarsest: &HamiltonianBundle<T>, opts: &SpectralOptions<T>) -> Result<T> {
    Ok(T::one() + ground_state(&coarsest.h, opts)?.0.abs())
}

fn check_chain<T: Real>(levels: &[HamiltonianBundle<T>], pairs: &[NestedPair<T>]) -> Result<()> {
    if levels.is_empty() || pairs.len() + 1 != levels.len() {
        return Err(Error::Parameter("need one nested pair per adjacent pair of levels".into()));
    }
    for (k, p) in pairs.iter().enumerate() {
        if p.coarse().len() != levels[k].lattice.len() || p.fine().len() != levels[k + 1].lattice.len() {
            return Err(Error::Parameter(format!("nested pair {k} does not match its levels")));
        }
    }
    Ok(())
}

pub fn resolvent_convergence<T: Real>(
    levels: &[HamiltonianBundle<T>],
    pairs: &[NestedPair<T>],
    beta: T,
    opts: &SpectralOptions<T>,
) -> Result<ConvergenceTrace<T>> {
    check_chain(levels, pairs)?;
    let mut e0_trace = Vec::new();
    for l in levels {
        let (e0, _) = ground_state(&l.h, opts)?;
        check_shift(e0, beta)?;
        e0_trace.push(e0);
    }
    let mut gaps = Vec::new();
    for (k, pair) in pairs.iter().enumerate() {
        let (coarse, fine) = (&levels[k], &levels[k + 1]);
        let idx = fine.basis.embedding_indices(&coarse.basis, pair.mode_injection())?;
        let rc = Resolvent::new(&coarse.h, beta, opts)?;
        let rf = Resolvent::new(&fine.h, beta, opts)?;
        let all: Vec<usize> = (0..coarse.dim()).collect();
        if let (Some(bc), Some(bf)) = (rc.block(&all), rf.block(&idx)) {
            let d = bc - bf;
            let d = (&d + d.adjoint()) * creal(lit::<T>(0.5));
            gaps.push(crate::linalg::hermitian_norm_dense(&d));
            continue;
        }
        let fdim = fine.dim();
        let apply = |x: &[Complex<T>]| -> Result<Vec<Complex<T>>> {
            let mut up = vec![czero::<T>(); fdim];
            for (i, &f) in idx.iter().enumerate() {
                up[f] = x[i];
            }
            let yf = rf.apply(&up)?;
            let yc = rc.apply(x)?;
            Ok(idx.iter().zip(&yc).map(|(&f, c)| c - yf[f]).collect())
        };
        gaps.push(hermitian_map_norm(apply, coarse.dim(), opts)?);
    }
    let levels_meta = levels
        .iter()
        .map(|l| {
            let v = l.lattice.v();
            (*v.numer() as f64 / *v.denom() as f64, to_f64(l.lattice.kappa()), l.dim())
        })
        .collect();
    Ok(ConvergenceTrace { levels: levels_meta, resolvent_gaps: gaps, e0_trace, beta })
}

/// `‖N (H + β)^{-1}‖` on one level.
pub fn number_resolvent_norm<T: Real>(bundle: &HamiltonianBundle<T>, beta: T, opts: &SpectralOptions<T>) -> Result<T> {
    let r = Resolvent::new(&bundle.h, beta, opts)?;
    let n: Vec<T> = (0..bundle.dim()).map(|i| lit(bundle.basis.particle_number(i) as f64)).collect();
    let dim = bundle.dim();
    // ‖N R‖² = largest eigenvalue of R N² R
    let apply = |x: &[Complex<T>]| -> Result<Vec<Complex<T>>> {
        let y = r.apply(x)?;
        let y: Vec<_> = y.iter().zip(&n).map(|(z, k)| z * (*k * *k)).collect();
        r.apply(&y)
    };
    Ok(hermitian_map_norm(apply, dim, opts)?.sqrt())
}

/// `‖N(H_n + β)^{-1}‖` across a nested sequence of levels.
pub fn higher_order_probe<T: Real>(levels: &[HamiltonianBundle<T>], beta: T, opts: &SpectralOptions<T>) -> Result<Vec<T>> {
    levels.iter().map(|l| number_resolvent_norm(l, beta, opts)).collect()
}

/// Relative spread `(max - min) / min` of a positive sequence.
pub fn relative_spread<T: Real>(values: &[T]) -> T {
    let lo = values.iter().fold(T::max_value().unwrap_or_else(T::one), |m, v| m.min(*v));
    let hi = values.iter().fold(T::zero(), |m, v| m.max(*v));
    (hi - lo) / lo
}

/// Expectations `<ψ_t| φ(F_t) |ψ_t>` with `ψ_t = e^{-itH}ψ` and `F_t = e^{-itω_{λV}} F`.
#[derive(Debug, Clone)]
pub struct ProbeResult<T> {
    pub times: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// `2π / (smallest nonzero level spacing)`.
    pub recurrence_time: T,
    /// `false` for times at or beyond the recurrence time.
    pub trusted: Vec<bool>,
}

impl<T: Real> ProbeResult<T> {
    /// `|value(t_{i+1}) - value(t_i)|` over consecutive times.
    pub fn cauchy_differences(&self) -> Vec<T> {
        self.values.windows(2).map(|w| crate::scalar::cabs(w[1] - w[0])).collect()
    }
}

/// Heisenberg-picture field expectation via full eigendecompositions.
///
/// `f` has length `2M` (species-major) and lives in the one-particle space of
/// `ω_{λV}`.
pub fn heisenberg_probe<T: Real>(
    bundle: &HamiltonianBundle<T>,
    potential: &Potential<T>,
    f: &[Complex<T>],
    times: &[T],
    psi: &[Complex<T>],
) -> Result<ProbeResult<T>> {
    let m = bundle.basis.modes();
    if f.len() != 2 * m {
        return Err(Error::Shape { expected: 2 * m, got: f.len() });
    }
    if psi.len() != bundle.dim() {
        return Err(Error::Shape { expected: bundle.dim(), got: psi.len() });
    }
    if (norm(psi) - T::one()).abs() > lit(1e-10) {
        return Err(Error::Parameter("probe state must be normalized".into()));
    }
    let hd = SpectralDecomposition::of_sparse(&bundle.h.matrix);
    let omega = omega_block(bundle.lambda, potential, &bundle.lattice).matrix();
    let od = SpectralDecomposition::of_dense(&omega);
    let creators: Vec<CsrMatrix<T>> = Species::BOTH
        .iter()
        .flat_map(|&sp| {
            (0..m).map(move |mode| {
                let mut e = vec![czero::<T>(); m];
                e[mode] = creal(T::one());
                (sp, e)
            })
        })
        .map(|(sp, e)| smeared_creation(&bundle.basis, sp, &e).matrix)
        .collect();

    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let psi_t = hd.apply_function(|l| cis(-t * l), psi);
        let f_t = od.apply_function(|l| cis(-t * l), f);
        // <ψ|φ(F)|ψ> = √2 Re Σ_s F_s <ψ|a*_s ψ>
        let mut acc = czero::<T>();
        for (s, c) in creators.iter().enumerate() {
            if f_t[s] == czero() {
                continue;
            }
            acc += f_t[s] * dot(&psi_t, &c.mul_vec(&psi_t));
        }
        values.push(creal(acc.re * lit::<T>(2.0).sqrt()));
    }
    let spacing = hd
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > lit(1e-9))
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
    let recurrence_time = T::two_pi() / spacing;
    let trusted = times.iter().map(|t| t.abs() < recurrence_time).collect();
    Ok(ProbeResult { times: times.to_vec(), values, recurrence_time, trusted })
}
