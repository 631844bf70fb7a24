//! One-particle operators on a momentum lattice: potential matrix, the
//! charge-coupling operator `b`, the pair kernel `R`, the coupling threshold,
//! the block operator `omega`, and Weyl quantization on a phase-space grid.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::MomentumLattice;
use crate::linalg::{hermitian_norm_dense, lanczos_extreme, Extreme, LanczosOptions};
use crate::scalar::{abs2, cabs, cimag_unit, cis, creal, czero, lit, Complex, Real};

/// Matrices at or above this size use Krylov norms instead of dense eigensolves.
pub const DENSE_NORM_LIMIT: usize = 2048;

/// Real function of position with its Fourier transform `f^(k) = ∫ e^{-ikx} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T: Real> {
    Zero,
    /// `f ≡ value`; its transform is a delta at `k = 0`, handled separately on lattices.
    Constant { value: T },
    /// `A e^{-x^2 / (2 w^2)}`
    Gaussian { amplitude: T, width: T },
    /// `A / (1 + (x/w)^2)`
    Lorentzian { amplitude: T, width: T },
    /// Piecewise-linear interpolant of samples, zero outside the sampled range.
    Sampled(SampledProfile<T>),
}

/// External potential `V`.
pub type Potential<T> = Profile<T>;
/// Spatial cutoff `g` of the interaction.
pub type SpaceCutoff<T> = Profile<T>;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile<T: Real> {
    pub x0: T,
    pub dx: T,
    pub values: Vec<T>,
}

impl<T: Real> SampledProfile<T> {
    pub fn new(x0: T, dx: T, values: Vec<T>) -> Result<Self> {
        if !(dx > T::zero()) || values.is_empty() {
            return Err(Error::Parameter("sampled profile needs dx > 0 and at least one sample".into()));
        }
        Ok(Self { x0, dx, values })
    }

    fn value(&self, x: T) -> T {
        let t = (x - self.x0) / self.dx;
        let n = self.values.len();
        let sample = |i: i64| if i >= 0 && (i as usize) < n { self.values[i as usize] } else { T::zero() };
        let i = t.floor();
        let frac = t - i;
        let i = i.to_i64().unwrap_or(i64::MIN / 2);
        sample(i) * (T::one() - frac) + sample(i + 1) * frac
    }

    /// Exact transform of the interpolant: sum of hat functions.
    fn fourier(&self, k: T) -> Complex<T> {
        let half = k * self.dx * lit(0.5);
        let sinc = if half.abs() < lit(1e-8) { T::one() } else { half.sin() / half };
        let sum = self.values.iter().enumerate().fold(czero::<T>(), |acc, (i, &f)| {
            let x = self.x0 + self.dx * lit(i as f64);
            acc + cis(-k * x) * f
        });
        sum * (self.dx * sinc * sinc)
    }
}

impl<T: Real> Profile<T> {
    pub fn gaussian(amplitude: T, width: T) -> Self {
        Self::Gaussian { amplitude, width }
    }

    pub fn lorentzian(amplitude: T, width: T) -> Self {
        Self::Lorentzian { amplitude, width }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant { .. } => "constant",
            Self::Gaussian { .. } => "gaussian",
            Self::Lorentzian { .. } => "lorentzian",
            Self::Sampled(_) => "sampled",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { value } => *value == T::zero(),
            Self::Gaussian { amplitude, .. } | Self::Lorentzian { amplitude, .. } => *amplitude == T::zero(),
            Self::Sampled(s) => s.values.iter().all(|v| *v == T::zero()),
        }
    }

    /// Multiplies the profile by `t`.
    pub fn scaled(&self, t: T) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Constant { value } => Self::Constant { value: *value * t },
            Self::Gaussian { amplitude, width } => Self::Gaussian { amplitude: *amplitude * t, width: *width },
            Self::Lorentzian { amplitude, width } => Self::Lorentzian { amplitude: *amplitude * t, width: *width },
            Self::Sampled(s) => Self::Sampled(SampledProfile {
                x0: s.x0,
                dx: s.dx,
                values: s.values.iter().map(|v| *v * t).collect(),
            }),
        }
    }

    pub fn value(&self, x: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Constant { value } => *value,
            Self::Gaussian { amplitude, width } => {
                let u = x / *width;
                *amplitude * (-(u * u) * lit(0.5)).exp()
            }
            Self::Lorentzian { amplitude, width } => {
                let u = x / *width;
                *amplitude / (T::one() + u * u)
            }
            Self::Sampled(s) => s.value(x),
        }
    }

    /// Regular part of the transform; the delta of a constant is not included.
    pub fn fourier(&self, k: T) -> Complex<T> {
        match self {
            Self::Zero | Self::Constant { .. } => czero(),
            Self::Gaussian { amplitude, width } => {
                let kw = k * *width;
                creal(*amplitude * *width * T::two_pi().sqrt() * (-(kw * kw) * lit(0.5)).exp())
            }
            Self::Lorentzian { amplitude, width } => {
                creal(*amplitude * *width * T::pi() * (-(*width * k.abs())).exp())
            }
            Self::Sampled(s) => s.fourier(k),
        }
    }

    /// Transform of the derivative, `i k f^(k)`.
    pub fn derivative_fourier(&self, k: T) -> Complex<T> {
        cimag_unit::<T>() * self.fourier(k) * k
    }

    /// Constant offset whose transform is a delta.
    fn constant_part(&self) -> T {
        match self {
            Self::Constant { value } => *value,
            _ => T::zero(),
        }
    }
}

/// `f^` on lattice differences `d / v`, `d = -(M-1)..=(M-1)`, indexed by `d + M - 1`.
/// Negative offsets are filled by conjugation so real profiles give exactly Hermitian matrices.
fn offset_table<T: Real>(f: &Profile<T>, lattice: &MomentumLattice<T>) -> Vec<Complex<T>> {
    let m = lattice.len() as i64;
    let mut table = vec![czero(); (2 * m - 1) as usize];
    for d in 0..m {
        let val = f.fourier(lattice.momentum_of_label(d));
        table[(d + m - 1) as usize] = val;
        table[(m - 1 - d) as usize] = val.conj();
    }
    table
}

/// `M_{ij} = (2π)^{-1} V^(γ_i - γ_j) / v`: multiplication by `V` in the lattice cell basis.
pub fn potential_matrix<T: Real>(potential: &Potential<T>, lattice: &MomentumLattice<T>) -> DMatrix<Complex<T>> {
    let m = lattice.len();
    let table = offset_table(potential, lattice);
    let scale = lattice.spacing() / T::two_pi();
    let c = potential.constant_part();
    DMatrix::from_fn(m, m, |i, j| {
        let mut z = table[i + m - 1 - j] * scale;
        if i == j {
            z += creal(c);
        }
        z
    })
}

/// `b_{ij} = (i/2)(s_i/s_j + s_j/s_i) M_{ij}` with `s = ε^{1/2}`; anti-Hermitian for real `V`.
pub fn b_matrix<T: Real>(potential: &Potential<T>, lattice: &MomentumLattice<T>) -> DMatrix<Complex<T>> {
    let pm = potential_matrix(potential, lattice);
    let s: Vec<T> = lattice.eps().iter().map(|e| e.sqrt()).collect();
    let half_i = cimag_unit::<T>() * lit::<T>(0.5);
    DMatrix::from_fn(pm.nrows(), pm.ncols(), |i, j| {
        let sym = s[i] / s[j] + s[j] / s[i];
        half_i * pm[(i, j)] * sym
    })
}

/// Antisymmetric kernel of the pair-creation part of the charge.
#[derive(Debug, Clone)]
pub struct PairKernel<T: Real> {
    matrix: DMatrix<Complex<T>>,
    weight: T,
}

impl<T: Real> PairKernel<T> {
    /// Quadrature-weighted matrix `R_{ij}`.
    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    /// Quadrature weight `1/v` folded into [`matrix`](Self::matrix).
    pub fn weight(&self) -> T {
        self.weight
    }

    /// Kernel value `R(γ_i, γ_j)` without the quadrature weight.
    pub fn value(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)] / self.weight
    }

    pub fn frobenius(&self) -> T {
        self.matrix.iter().fold(T::zero(), |s, z| s + abs2(*z)).sqrt()
    }

    /// Entries violating `|R(γ,γ')| <= |V'^(γ+γ')| / (4π sqrt(ε(γ) ε(γ')))`, with relative slack `1e-12`.
    pub fn bound_violations(&self, potential: &Potential<T>, lattice: &MomentumLattice<T>) -> Vec<(usize, usize)> {
        let k = lattice.momenta();
        let e = lattice.eps();
        let mut bad = Vec::new();
        for i in 0..lattice.len() {
            for j in 0..lattice.len() {
                let bound = cabs(potential.derivative_fourier(k[i] + k[j])) / (T::two_pi() * lit(2.0) * (e[i] * e[j]).sqrt());
                if cabs(self.value(i, j)) > bound * (T::one() + lit(1e-12)) {
                    bad.push((i, j));
                }
            }
        }
        bad
    }
}

/// `R_{ij} = (i/4π) V^(γ_i+γ_j) (s_i/s_j - s_j/s_i) / v`, antisymmetric by construction.
pub fn pair_kernel<T: Real>(potential: &Potential<T>, lattice: &MomentumLattice<T>) -> PairKernel<T> {
    let m = lattice.len();
    let k = lattice.momenta();
    let e = lattice.eps();
    let weight = lattice.spacing();
    // V^ at γ_i + γ_j depends only on i + j.
    let sums: Vec<Complex<T>> = (0..2 * m - 1)
        .map(|s| potential.fourier(lattice.momentum_of_label(s as i64 - 2 * lattice.jmax())))
        .collect();
    let pref = cimag_unit::<T>() * (weight / (T::two_pi() * lit(2.0)));
    let mut r = DMatrix::from_element(m, m, czero());
    for i in 0..m {
        for j in (i + 1)..m {
            // s_i/s_j - s_j/s_i = (γ_i - γ_j)(γ_i + γ_j) / ((ε_i + ε_j) sqrt(ε_i ε_j))
            let bracket = (k[i] - k[j]) * (k[i] + k[j]) / ((e[i] + e[j]) * (e[i] * e[j]).sqrt());
            let z = pref * sums[i + j] * bracket;
            r[(i, j)] = z;
            r[(j, i)] = -z;
        }
    }
    PairKernel { matrix: r, weight }
}

/// Coupling threshold `lambda_quant`, or `Infinite` when the potential decouples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Threshold<T> {
    /// `true` when `|lambda|` is strictly below the threshold.
    pub fn admits(&self, lambda: T) -> bool {
        match self {
            Self::Finite(t) => lambda.abs() < *t,
            Self::Infinite => true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(t) => crate::scalar::to_f64(*t),
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            Self::Finite(t) => Some(*t),
            Self::Infinite => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CouplingReport<T: Real> {
    /// `½ ‖ε^{-1} V + V ε^{-1}‖`
    pub c0: T,
    /// Hilbert-Schmidt norm of `ε^{-1/2} [V, ε] ε^{-1/2}`
    pub c1: T,
    pub lambda_quant: Threshold<T>,
    pub mass: T,
}

impl<T: Real> CouplingReport<T> {
    /// Constructive form-bound constants `(δ, C) = (|λ|(c0 + c1/m), |λ| c1)`.
    pub fn form_bound(&self, lambda: T) -> (T, T) {
        let l = lambda.abs();
        (l * (self.c0 + self.c1 / self.mass), l * self.c1)
    }
}

/// Spectral norm of a dense Hermitian matrix; Krylov above [`DENSE_NORM_LIMIT`].
pub fn hermitian_norm<T: Real>(a: &DMatrix<Complex<T>>) -> Result<T> {
    if a.nrows() < DENSE_NORM_LIMIT {
        return Ok(hermitian_norm_dense(a));
    }
    let apply = |x: &[Complex<T>]| -> Vec<Complex<T>> {
        let v = nalgebra::DVector::from_column_slice(x);
        (a * v).iter().copied().collect()
    };
    let opts = LanczosOptions { tol: lit(1e-10), ..LanczosOptions::default() };
    let (hi, _, _) = lanczos_extreme(apply, a.nrows(), Extreme::Largest, &opts)?;
    let (lo, _, _) = lanczos_extreme(apply, a.nrows(), Extreme::Smallest, &opts)?;
    Ok(hi.abs().max(lo.abs()))
}

pub fn lambda_quant<T: Real>(potential: &Potential<T>, lattice: &MomentumLattice<T>) -> Result<CouplingReport<T>> {
    let pm = potential_matrix(potential, lattice);
    let e = lattice.eps();
    let n = lattice.len();
    let sym = DMatrix::from_fn(n, n, |i, j| pm[(i, j)] * (T::one() / e[i] + T::one() / e[j]));
    let c0 = hermitian_norm(&sym)? * lit(0.5);
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            // ε_j - ε_i = (γ_j - γ_i)(γ_j + γ_i) / (ε_i + ε_j)
            let k = lattice.momenta();
            let de = (k[j] - k[i]) * (k[j] + k[i]) / (e[i] + e[j]);
            acc += abs2(pm[(i, j)]) * de * de / (e[i] * e[j]);
        }
    }
    let c1 = acc.sqrt();
    let mass = lattice.mass();
    let denom = c0 + c1 / mass;
    let lambda_quant = if denom == T::zero() { Threshold::Infinite } else { Threshold::Finite(T::one() / denom) };
    Ok(CouplingReport { c0, c1, lambda_quant, mass })
}

/// `[[ε, λb], [λb†, ε]]` over two field species.
#[derive(Debug, Clone)]
pub struct OneParticleBlock<T: Real> {
    pub lambda: T,
    eps: Vec<T>,
    b: DMatrix<Complex<T>>,
}

impl<T: Real> OneParticleBlock<T> {
    pub fn modes(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[T] {
        &self.eps
    }

    /// Unscaled coupling block `b`.
    pub fn b(&self) -> &DMatrix<Complex<T>> {
        &self.b
    }

    /// Assembled `2M x 2M` matrix, species-major.
    pub fn matrix(&self) -> DMatrix<Complex<T>> {
        let m = self.modes();
        let lb = self.b.map(|z| z * self.lambda);
        let lbh = lb.adjoint();
        DMatrix::from_fn(2 * m, 2 * m, |r, c| match (r < m, c < m) {
            (true, true) | (false, false) => {
                if r == c {
                    creal(self.eps[r % m])
                } else {
                    czero()
                }
            }
            (true, false) => lb[(r, c - m)],
            (false, true) => lbh[(r - m, c)],
        })
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        T::hermitian_eigvals(&self.matrix()).iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }
}

pub fn omega_block<T: Real>(lambda: T, potential: &Potential<T>, lattice: &MomentumLattice<T>) -> OneParticleBlock<T> {
    OneParticleBlock { lambda, eps: lattice.eps().to_vec(), b: b_matrix(potential, lattice) }
}

/// Centered position grid of `n` points with spacing `dx`, paired with the
/// momentum grid of spacing `2π / (n dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylGrid<T> {
    pub n: usize,
    pub dx: T,
}

impl<T: Real> WeylGrid<T> {
    /// Grid with equal position and momentum spacing `sqrt(2π / n)`.
    pub fn balanced(n: usize) -> Self {
        Self { n, dx: (T::two_pi() / lit(n as f64)).sqrt() }
    }

    pub fn dk(&self) -> T {
        T::two_pi() / (lit::<T>(self.n as f64) * self.dx)
    }

    pub fn x(&self, i: usize) -> T {
        lit::<T>(i as f64 - (self.n / 2) as f64) * self.dx
    }

    pub fn k(&self, l: usize) -> T {
        lit::<T>(l as f64 - (self.n / 2) as f64) * self.dk()
    }
}

/// Midpoint discretization of `(2π)^{-1} ∫ e^{i(x-y)k} a((x+y)/2, k) dk` on the periodic position grid.
///
/// Separations are taken as minimal images on the torus and midpoints are
/// wrapped into the box, so symbols depending on `k` alone give exactly the
/// circulant Fourier multiplier `a(D)`.
pub fn weyl_quantize<T, F>(symbol: F, grid: &WeylGrid<T>) -> Result<DMatrix<Complex<T>>>
where
    T: Real,
    F: Fn(T, T) -> Complex<T>,
{
    let n = grid.n;
    if n == 0 {
        return Err(Error::Parameter("Weyl grid needs at least one point".into()));
    }
    let dk = grid.dk();
    let center = (n / 2) as f64;
    let half = n as i64 / 2;
    // symbols at half-step midpoints h, x = (h/2 - n/2) dx
    let sym: Vec<Vec<Complex<T>>> = (0..2 * n)
        .map(|h| {
            let xm = lit::<T>(h as f64 * 0.5 - center) * grid.dx;
            (0..n).map(|l| symbol(xm, grid.k(l))).collect()
        })
        .collect();
    // phases e^{i d dx k_l} for minimal-image separations d in [-n/2, n - n/2)
    let phase: Vec<Vec<Complex<T>>> = (0..n)
        .map(|d| {
            let dxij = lit::<T>(d as f64 - center) * grid.dx;
            (0..n).map(|l| cis(dxij * grid.k(l))).collect()
        })
        .collect();
    let w = grid.dx * dk / T::two_pi();
    let ni = n as i64;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let d = (i as i64 - j as i64 + half).rem_euclid(ni) - half;
        let h = (2 * j as i64 + d).rem_euclid(2 * ni) as usize;
        let a = &sym[h];
        let p = &phase[(d + half) as usize];
        a.iter().zip(p).fold(czero::<T>(), |acc, (x, y)| acc + x * y) * w
    }))
}

/// Frobenius norm of `|D_{k_1}|^s R` with `D` the lattice difference along the first index.
///
/// Columns are zero-padded to twice their length so the spectral multiplier
/// `(2 v |sin(π n / L)|)^s` does not wrap the kernel around.
pub fn weighted_kernel_norm<T: Real>(kern: &PairKernel<T>, s: T, lattice: &MomentumLattice<T>) -> Result<T> {
    if s < T::zero() {
        return Err(Error::Parameter(format!("weight exponent must be nonnegative, got {s}")));
    }
    let r = kern.matrix();
    let m = r.nrows();
    if m != lattice.len() {
        return Err(Error::Shape { expected: lattice.len(), got: m });
    }
    if s == T::zero() {
        return Ok(kern.frobenius());
    }
    let len = 2 * m;
    let v = lattice.v_real();
    let mult: Vec<T> = (0..len)
        .map(|n| {
            let theta = T::pi() * lit(n as f64) / lit(len as f64);
            (lit::<T>(2.0) * v * theta.sin().abs()).powf(s)
        })
        .collect();
    let mut acc = T::zero();
    let mut buf = vec![czero::<T>(); len];
    for col in 0..m {
        buf.iter_mut().for_each(|z| *z = czero());
        for i in 0..m {
            buf[i] = r[(i, col)];
        }
        T::fft_in_place(&mut buf, false);
        // Parseval for the unnormalized transform
        acc += buf.iter().zip(&mult).fold(T::zero(), |a, (z, w)| a + abs2(*z) * *w * *w) / lit(len as f64);
    }
    Ok(acc.sqrt())
}
