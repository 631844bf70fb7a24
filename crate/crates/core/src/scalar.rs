//! Scalar abstraction shared by every numerical module.
//!
//! All routines are generic over [`Real`], implemented for `f32` and `f64`.
//! Dense Hermitian eigensolves and FFTs are dispatched to concrete backends
//! (faer and rustfft) through the trait so the generic code never names them.

use std::fmt::{Debug, Display};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

pub use nalgebra::Complex;

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
    fn hermitian_eigh(a: &DMatrix<Complex<Self>>) -> (DVector<Self>, DMatrix<Complex<Self>>);

    /// Eigenvalues of a Hermitian matrix, ascending.
    fn hermitian_eigvals(a: &DMatrix<Complex<Self>>) -> DVector<Self>;

    /// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
    fn symmetric_eigh(a: &DMatrix<Self>) -> (DVector<Self>, DMatrix<Self>);

    /// Unnormalized in-place DFT; `inverse` selects the `e^{+i..}` kernel.
    fn fft_in_place(buf: &mut [Complex<Self>], inverse: bool);
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `i`
#[inline]
pub fn cimag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `e^{i theta}`
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Squared modulus without the square root.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    abs2(z).sqrt()
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn hermitian_eigh(a: &DMatrix<Complex<$t>>) -> (DVector<$t>, DMatrix<Complex<$t>>) {
                let n = a.nrows();
                if n == 0 {
                    return (DVector::zeros(0), DMatrix::zeros(0, 0));
                }
                let m = faer::Mat::<Complex<$t>>::from_fn(n, n, |i, j| a[(i, j)]);
                let evd = m
                    .self_adjoint_eigen(faer::Side::Lower)
                    .expect("Hermitian eigendecomposition");
                let s = evd.S().column_vector();
                let u = evd.U();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&x, &y| s[x].re.partial_cmp(&s[y].re).unwrap_or(std::cmp::Ordering::Equal));
                let vals = DVector::from_iterator(n, order.iter().map(|&k| s[k].re));
                let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
                (vals, vecs)
            }

            fn hermitian_eigvals(a: &DMatrix<Complex<$t>>) -> DVector<$t> {
                let n = a.nrows();
                if n == 0 {
                    return DVector::zeros(0);
                }
                let m = faer::Mat::<Complex<$t>>::from_fn(n, n, |i, j| a[(i, j)]);
                let mut vals = m
                    .self_adjoint_eigenvalues(faer::Side::Lower)
                    .expect("Hermitian eigenvalues");
                vals.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
                DVector::from_vec(vals)
            }

            fn symmetric_eigh(a: &DMatrix<$t>) -> (DVector<$t>, DMatrix<$t>) {
                let n = a.nrows();
                if n == 0 {
                    return (DVector::zeros(0), DMatrix::zeros(0, 0));
                }
                let m = faer::Mat::<$t>::from_fn(n, n, |i, j| a[(i, j)]);
                let evd = m
                    .self_adjoint_eigen(faer::Side::Lower)
                    .expect("symmetric eigendecomposition");
                let s = evd.S().column_vector();
                let u = evd.U();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&x, &y| s[x].partial_cmp(&s[y]).unwrap_or(std::cmp::Ordering::Equal));
                let vals = DVector::from_iterator(n, order.iter().map(|&k| s[k]));
                let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
                (vals, vecs)
            }

            fn fft_in_place(buf: &mut [Complex<$t>], inverse: bool) {
                if buf.len() <= 1 {
                    return;
                }
                let fft: Arc<dyn rustfft::Fft<$t>> = {
                    let mut planner = rustfft::FftPlanner::<$t>::new();
                    if inverse {
                        planner.plan_fft_inverse(buf.len())
                    } else {
                        planner.plan_fft_forward(buf.len())
                    }
                };
                fft.process(buf);
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
