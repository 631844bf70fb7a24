//! Stable quantization of the charged Klein-Gordon field on a periodic grid.
//!
//! Phase vectors are real and of length `4G`, laid out as
//! `(π₁, π₂, φ₁, φ₂)` with `π = π₁ + iπ₂`, `φ = φ₁ + iφ₂`. The spatial
//! Laplacian is spectral, so `ε^s` is a real symmetric circulant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oneparticle::Potential;
use crate::scalar::{creal, czero, lit, Complex, Real};

/// Smallest admissible singular value of the generator.
pub const SINGULARITY_FLOOR: f64 = 1e-10;

/// Uniform periodic grid carrying samples of the external potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid<T: Real> {
    points: usize,
    dx: T,
    mass: T,
    v_samples: Vec<T>,
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn new(points: usize, dx: T, mass: T, v_samples: Vec<T>) -> Result<Self> {
        if points == 0 || !points.is_multiple_of(2) {
            return Err(Error::Parameter(format!("grid size must be even and positive, got {points}")));
        }
        if !(dx > T::zero()) || !(mass > T::zero()) {
            return Err(Error::Parameter("grid spacing and mass must be positive".into()));
        }
        if v_samples.len() != points {
            return Err(Error::Shape { expected: points, got: v_samples.len() });
        }
        Ok(Self { points, dx, mass, v_samples })
    }

    /// Samples `potential` at `x_i = (i - G/2) dx`.
    pub fn from_potential(points: usize, dx: T, mass: T, potential: &Potential<T>) -> Result<Self> {
        let xs = (0..points).map(|i| lit::<T>(i as f64 - (points / 2) as f64) * dx);
        Self::new(points, dx, mass, xs.map(|x| potential.value(x)).collect())
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn v_samples(&self) -> &[T] {
        &self.v_samples
    }

    /// Same grid with `V ≡ 0`.
    pub fn free(&self) -> Self {
        Self { v_samples: vec![T::zero(); self.points], ..self.clone() }
    }

    /// FFT momenta `2π n / (G dx)` in FFT order, `n` signed.
    pub fn momenta(&self) -> Vec<T> {
        let g = self.points as i64;
        (0..g)
            .map(|n| {
                let s = if n <= g / 2 { n } else { n - g };
                T::two_pi() * lit(s as f64) / (lit::<T>(g as f64) * self.dx)
            })
            .collect()
    }

    pub fn dispersion(&self) -> Vec<T> {
        self.momenta().iter().map(|k| (*k * *k + self.mass * self.mass).sqrt()).collect()
    }

    /// Real circulant `f(D)` for an even multiplier `f`.
    fn multiplier(&self, f: impl Fn(T) -> T) -> DMatrix<T> {
        let g = self.points;
        let mut col: Vec<Complex<T>> = self.momenta().into_iter().map(|k| creal(f(k))).collect();
        T::fft_in_place(&mut col, true);
        let scale = lit::<T>(g as f64).recip();
        let c: Vec<T> = col.iter().map(|z| z.re * scale).collect();
        DMatrix::from_fn(g, g, |i, j| c[(i + g - j) % g])
    }

    /// `ε^s` as a dense real matrix.
    pub fn eps_power(&self, s: T) -> DMatrix<T> {
        let m2 = self.mass * self.mass;
        let half_s = s * lit(0.5);
        self.multiplier(|k| (k * k + m2).powf(half_s))
    }
}

/// Generator of the classical flow together with the energy Gram matrix.
#[derive(Debug, Clone)]
pub struct RealGenerator<T: Real> {
    pub matrix: DMatrix<T>,
    pub metric: DMatrix<T>,
    points: usize,
}

fn block_copy<T: Real>(dst: &mut DMatrix<T>, bi: usize, bj: usize, g: usize, src: &DMatrix<T>) {
    dst.view_mut((bi * g, bj * g), (g, g)).copy_from(src);
}

fn block_diag<T: Real>(dst: &mut DMatrix<T>, bi: usize, bj: usize, g: usize, d: &[T], sign: T) {
    for (i, &x) in d.iter().enumerate() {
        dst[(bi * g + i, bj * g + i)] = sign * x;
    }
}

/// Generator of `d/dt (π, φ) = (-iVπ - ε²φ, π - iVφ)` and the energy
/// `‖π‖² + ‖εφ‖² + i(φ|Vπ) - i(π|Vφ)` as real `4G x 4G` matrices.
pub fn build_generator<T: Real>(grid: &PhaseSpaceGrid<T>) -> Result<RealGenerator<T>> {
    let delta = positivity_margin(grid);
    if !(delta < T::one()) {
        return Err(Error::Unstable { delta: crate::scalar::to_f64(delta) });
    }
    let g = grid.points;
    let v = &grid.v_samples;
    let eps2 = grid.eps_power(lit(2.0));
    let (p1, p2, f1, f2) = (0, 1, 2, 3);
    let one = T::one();

    let mut a = DMatrix::zeros(4 * g, 4 * g);
    block_diag(&mut a, p1, p2, g, v, one);
    block_copy(&mut a, p1, f1, g, &(-&eps2));
    block_diag(&mut a, p2, p1, g, v, -one);
    block_copy(&mut a, p2, f2, g, &(-&eps2));
    block_diag(&mut a, f1, p1, g, &vec![one; g], one);
    block_diag(&mut a, f1, f2, g, v, one);
    block_diag(&mut a, f2, p2, g, &vec![one; g], one);
    block_diag(&mut a, f2, f1, g, v, -one);

    let mut s = DMatrix::zeros(4 * g, 4 * g);
    block_diag(&mut s, p1, p1, g, &vec![one; g], one);
    block_diag(&mut s, p2, p2, g, &vec![one; g], one);
    block_copy(&mut s, f1, f1, g, &eps2);
    block_copy(&mut s, f2, f2, g, &eps2);
    block_diag(&mut s, p1, f2, g, v, one);
    block_diag(&mut s, f2, p1, g, v, one);
    block_diag(&mut s, p2, f1, g, v, -one);
    block_diag(&mut s, f1, p2, g, v, -one);

    Ok(RealGenerator { matrix: a, metric: s, points: g })
}

impl<T: Real> RealGenerator<T> {
    /// `‖Aᵀ S + S A‖_F / ‖S A‖_F`
    pub fn antisymmetry_residual(&self) -> T {
        let sa = &self.metric * &self.matrix;
        let scale = sa.norm();
        let r = (sa.transpose() + &sa).norm();
        if scale > T::zero() {
            r / scale
        } else {
            r
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }
}

/// Smallest `δ` with `±i((φ|Vπ) - (π|Vφ)) <= δ(‖π‖² + ‖εφ‖²)`: the largest
/// singular value of `V ε^{-1}`.
pub fn positivity_margin<T: Real>(grid: &PhaseSpaceGrid<T>) -> T {
    if grid.v_samples.iter().all(|v| *v == T::zero()) {
        return T::zero();
    }
    let g = grid.points;
    let einv = grid.eps_power(-T::one());
    let k = DMatrix::from_fn(g, g, |i, j| grid.v_samples[i] * einv[(i, j)]);
    let gram = k.transpose() * &k;
    let (vals, _) = T::symmetric_eigh(&gram);
    vals[g - 1].max(T::zero()).sqrt()
}

/// Complex structure `j` and positive part `h_V` of the polar decomposition `a = j h_V`.
#[derive(Debug, Clone)]
pub struct KahlerStructure<T: Real> {
    pub j: DMatrix<T>,
    pub h: DMatrix<T>,
    /// Symmetric positive form `Ω j`; the real part of the dynamical inner product.
    pub omega_j: DMatrix<T>,
    /// Spectrum of `h_V`, ascending.
    pub h_spectrum: Vec<T>,
    points: usize,
}

fn sym_power<T: Real>(vals: &DVector<T>, vecs: &DMatrix<T>, p: T) -> DMatrix<T> {
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let f = l.powf(p);
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= f);
    }
    scaled * vecs.transpose()
}

/// Symplectic form `σ(y, y') = Σ_i (π_i·φ'_i - φ_i·π'_i)` as a matrix.
pub fn symplectic_form<T: Real>(points: usize) -> DMatrix<T> {
    let g = points;
    let mut w = DMatrix::zeros(4 * g, 4 * g);
    for i in 0..2 * g {
        w[(i, 2 * g + i)] = T::one();
        w[(2 * g + i, i)] = -T::one();
    }
    w
}

/// Polar decomposition computed in the energy metric: with
/// `Ã = S^{1/2} a S^{-1/2}` antisymmetric, `h̃ = (ÃᵀÃ)^{1/2}` and `j̃ = Ã h̃^{-1}`.
pub fn polar_decompose<T: Real>(gen: &RealGenerator<T>) -> Result<KahlerStructure<T>> {
    let (sv, sq) = T::symmetric_eigh(&gen.metric);
    if !(sv[0] > T::zero()) {
        return Err(Error::Unstable { delta: f64::NAN });
    }
    let half = lit::<T>(0.5);
    let s_half = sym_power(&sv, &sq, half);
    let s_mhalf = sym_power(&sv, &sq, -half);
    let at = &s_half * &gen.matrix * &s_mhalf;
    let b = at.transpose() * &at;
    let b = (&b + b.transpose()) * half;
    let (mu, q) = T::symmetric_eigh(&b);
    let smallest = mu[0].max(T::zero()).sqrt();
    if smallest <= lit(SINGULARITY_FLOOR) {
        return Err(Error::IllConditioned(crate::scalar::to_f64(smallest)));
    }
    let h_t = sym_power(&mu, &q, half);
    let h_t_inv = sym_power(&mu, &q, -half);
    let j = &s_mhalf * &at * &h_t_inv * &s_half;
    let h = &s_mhalf * &h_t * &s_half;
    let omega_j = symplectic_form::<T>(gen.points) * &j;
    let omega_j = (&omega_j + omega_j.transpose()) * half;
    let h_spectrum = mu.iter().map(|m| m.max(T::zero()).sqrt()).collect();
    Ok(KahlerStructure { j, h, omega_j, h_spectrum, points: gen.points })
}

impl<T: Real> KahlerStructure<T> {
    pub fn points(&self) -> usize {
        self.points
    }

    /// Largest entry of `j² + 1`.
    pub fn j_square_residual(&self) -> T {
        let n = self.j.nrows();
        (&self.j * &self.j + DMatrix::<T>::identity(n, n)).amax()
    }

    /// `‖j h - a‖_F / ‖a‖_F`
    pub fn reconstruction_residual(&self, gen: &RealGenerator<T>) -> T {
        (&self.j * &self.h - &gen.matrix).norm() / gen.matrix.norm()
    }

    /// Dynamical inner product `y₁ᵀ Ω j y₂ + i y₁ᵀ Ω y₂`.
    ///
    /// Linear in `y₂` and antilinear in `y₁` for the complex structure `j`:
    /// `dyn(y₁, j y₂) = i dyn(y₁, y₂)` and `dyn(j y₁, y₂) = -i dyn(y₁, y₂)`.
    pub fn dyn_inner(&self, y1: &DVector<T>, y2: &DVector<T>) -> Result<Complex<T>> {
        let n = 4 * self.points;
        for y in [y1, y2] {
            if y.len() != n {
                return Err(Error::Shape { expected: n, got: y.len() });
            }
        }
        let re = y1.dot(&(&self.omega_j * y2));
        Ok(Complex::new(re, symplectic_pair(self.points, y1, y2)))
    }

    /// Smallest eigenvalue of `Ω j`; positive for a Kähler structure.
    pub fn form_min_eigenvalue(&self) -> T {
        T::symmetric_eigh(&self.omega_j).0[0]
    }
}

fn symplectic_pair<T: Real>(g: usize, y1: &DVector<T>, y2: &DVector<T>) -> T {
    (0..2 * g).fold(T::zero(), |s, i| s + y1[i] * y2[2 * g + i] - y1[2 * g + i] * y2[i])
}

/// Free complex structure `j₀(π, φ) = (-εφ, ε^{-1}π)`.
pub fn free_complex_structure<T: Real>(grid: &PhaseSpaceGrid<T>) -> DMatrix<T> {
    let g = grid.points;
    let e = grid.eps_power(T::one());
    let einv = grid.eps_power(-T::one());
    let mut j = DMatrix::zeros(4 * g, 4 * g);
    block_copy(&mut j, 0, 2, g, &(-&e));
    block_copy(&mut j, 1, 3, g, &(-&e));
    block_copy(&mut j, 2, 0, g, &einv);
    block_copy(&mut j, 3, 1, g, &einv);
    j
}

/// Pair of complex species components.
pub type ComplexPair<T> = (Vec<Complex<T>>, Vec<Complex<T>>);

/// `U y = (ε^{-1/2}π₁ + iε^{1/2}φ₁, ε^{-1/2}π₂ + iε^{1/2}φ₂)`.
pub fn free_identification<T: Real>(grid: &PhaseSpaceGrid<T>, y: &DVector<T>) -> Result<ComplexPair<T>> {
    let g = grid.points;
    if y.len() != 4 * g {
        return Err(Error::Shape { expected: 4 * g, got: y.len() });
    }
    let half = lit::<T>(0.5);
    let em = grid.eps_power(-half);
    let ep = grid.eps_power(half);
    let comp = |p: usize, f: usize| -> Vec<Complex<T>> {
        let pi = &em * y.rows(p * g, g);
        let phi = &ep * y.rows(f * g, g);
        pi.iter().zip(phi.iter()).map(|(a, b)| Complex::new(*a, *b)).collect()
    };
    Ok((comp(0, 2), comp(1, 3)))
}

/// `κ(π, φ) = (-conj π, conj φ)`.
pub fn time_reversal<T: Real>(y: &DVector<T>) -> DVector<T> {
    let g = y.len() / 4;
    let mut out = y.clone();
    for i in 0..g {
        out[i] = -y[i];
        out[3 * g + i] = -y[3 * g + i];
    }
    out
}

/// Matrix of [`time_reversal`].
pub fn time_reversal_matrix<T: Real>(points: usize) -> DMatrix<T> {
    let g = points;
    DMatrix::from_fn(4 * g, 4 * g, |i, j| {
        if i != j {
            T::zero()
        } else if i < g || i >= 3 * g {
            -T::one()
        } else {
            T::one()
        }
    })
}

/// Summary of one quantization run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationReport<T> {
    pub delta: T,
    pub min_spec_h: T,
    pub j_square_residual: T,
    pub reconstruction_residual: T,
    /// Largest deviation of the free `h₀` spectrum from `sqrt(k² + m²)`.
    pub free_check_error: T,
}

/// Runs positivity, generator, and polar decomposition on `grid` and on its free counterpart.
pub fn quantize<T: Real>(grid: &PhaseSpaceGrid<T>) -> Result<(KahlerStructure<T>, QuantizationReport<T>)> {
    let delta = positivity_margin(grid);
    let gen = build_generator(grid)?;
    let ks = polar_decompose(&gen)?;
    let free = polar_decompose(&build_generator(&grid.free())?)?;
    let free_check_error = free_spectrum_error(grid, &free.h_spectrum);
    let report = QuantizationReport {
        delta,
        min_spec_h: ks.h_spectrum[0],
        j_square_residual: ks.j_square_residual(),
        reconstruction_residual: ks.reconstruction_residual(&gen),
        free_check_error,
    };
    Ok((ks, report))
}

/// Compares a computed spectrum with each FFT dispersion value repeated four times.
pub fn free_spectrum_error<T: Real>(grid: &PhaseSpaceGrid<T>, spectrum: &[T]) -> T {
    let mut expected: Vec<T> = grid.dispersion().into_iter().flat_map(|e| [e; 4]).collect();
    expected.sort_by(|a, b| a.partial_cmp(b).expect("finite dispersion"));
    if expected.len() != spectrum.len() {
        return T::max_value().unwrap_or_else(T::one);
    }
    expected.iter().zip(spectrum).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
}

/// Complex grid vector helper for callers working in `L² ⊕ L²`.
pub fn l2_inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(czero(), |s, (x, y)| s + x.conj() * y)
}
