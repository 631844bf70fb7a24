//! Dense and Krylov linear algebra on complex vectors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{abs2, czero, lit, to_f64, Complex, Real};
use crate::sparse::CsrMatrix;

/// Which end of the spectrum a Krylov solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions<T> {
    /// Relative residual target `|A x - theta x| <= tol * max(1, |theta|)`.
    pub tol: T,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-10), max_krylov: 160, max_restarts: 40, seed: 0x5eed }
    }
}

pub fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |s, x| s + abs2(*x)).sqrt()
}

pub fn normalize<T: Real>(a: &mut [Complex<T>]) -> T {
    let n = norm(a);
    if n > T::zero() {
        a.iter_mut().for_each(|x| *x /= Complex::new(n, T::zero()));
    }
    n
}

/// `y += alpha * x`
pub fn axpy<T: Real>(y: &mut [Complex<T>], alpha: Complex<T>, x: &[Complex<T>]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Deterministic pseudo-random unit vector.
pub fn random_unit<T: Real>(dim: usize, seed: u64) -> Vec<Complex<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex<T>> = (0..dim)
        .map(|_| {
            let re: f64 = rng.random::<f64>() - 0.5;
            let im: f64 = rng.random::<f64>() - 0.5;
            Complex::new(lit(re), lit(im))
        })
        .collect();
    normalize(&mut v);
    v
}

/// Extreme eigenpair of a Hermitian operator given as a matrix-free map.
///
/// Lanczos with full reorthogonalization and explicit restarts on the Ritz
/// vector. The returned residual is recomputed from the final vector.
pub fn lanczos_extreme<T, F>(
    apply: F,
    dim: usize,
    which: Extreme,
    opts: &LanczosOptions<T>,
) -> Result<(T, Vec<Complex<T>>, T)>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    if dim == 0 {
        return Err(Error::Parameter("empty operator".into()));
    }
    let mut start = random_unit::<T>(dim, opts.seed);
    let mut total_iters = 0;
    let mut last_residual = T::max_value().unwrap_or_else(T::one);
    let kmax = opts.max_krylov.max(2).min(dim);
    let tiny = lit::<T>(1e-13);

    for _ in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex<T>>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        let mut ritz: Option<(T, DVector<T>)> = None;
        let mut invariant = false;

        for k in 0..kmax {
            let mut w = apply(&basis[k]);
            total_iters += 1;
            let alpha = dot(&basis[k], &w).re;
            axpy(&mut w, Complex::new(-alpha, T::zero()), &basis[k]);
            if k > 0 {
                axpy(&mut w, Complex::new(-betas[k - 1], T::zero()), &basis[k - 1]);
            }
            for _ in 0..2 {
                for u in &basis {
                    let c = dot(u, &w);
                    axpy(&mut w, -c, u);
                }
            }
            alphas.push(alpha);
            let beta = norm(&w);
            let scale = alphas.iter().fold(T::one(), |m, a| m.max(a.abs()));
            invariant = beta <= tiny * scale;
            let last = k + 1 == kmax;
            if invariant || last || k % 8 == 7 {
                let (theta, s) = tridiagonal_extreme(&alphas, &betas, which);
                let est = beta * s[s.len() - 1].abs();
                ritz = Some((theta, s));
                if invariant || est <= opts.tol * T::one().max(theta.abs()) {
                    break;
                }
            }
            if last {
                break;
            }
            betas.push(beta);
            let inv = Complex::new(T::one() / beta, T::zero());
            basis.push(w.iter().map(|x| x * inv).collect());
        }

        let (theta, s) = ritz.expect("at least one Ritz evaluation");
        let mut x = vec![czero::<T>(); dim];
        for (coef, v) in s.iter().zip(&basis) {
            axpy(&mut x, Complex::new(*coef, T::zero()), v);
        }
        normalize(&mut x);
        let ax = apply(&x);
        let resid = ax
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (a, b)| acc + abs2(a - b * Complex::new(theta, T::zero())))
            .sqrt();
        last_residual = resid;
        if invariant || resid <= opts.tol * T::one().max(theta.abs()) {
            return Ok((theta, x, resid));
        }
        start = x;
    }
    Err(Error::Solver { residual: to_f64(last_residual), iterations: total_iters })
}

fn tridiagonal_extreme<T: Real>(alphas: &[T], betas: &[T], which: Extreme) -> (T, DVector<T>) {
    let k = alphas.len();
    let mut t = DMatrix::<T>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (vals, vecs) = T::symmetric_eigh(&t);
    let idx = match which {
        Extreme::Smallest => 0,
        Extreme::Largest => k - 1,
    };
    (vals[idx], vecs.column(idx).into_owned())
}

/// Conjugate gradients for a Hermitian positive definite map.
pub fn conjugate_gradient<T, F>(apply: F, rhs: &[Complex<T>], tol: T, max_iter: usize) -> Result<Vec<Complex<T>>>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    let n = rhs.len();
    let bnorm = norm(rhs);
    let mut x = vec![czero::<T>(); n];
    if bnorm == T::zero() {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap).re;
        axpy(&mut x, Complex::new(alpha, T::zero()), &p);
        axpy(&mut r, Complex::new(-alpha, T::zero()), &ap);
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * Complex::new(beta, T::zero());
        }
        rr = rr_new;
        if it + 1 == max_iter {
            break;
        }
    }
    Err(Error::Solver { residual: to_f64(rr.sqrt() / bnorm), iterations: max_iter })
}

/// Largest singular value of `A` from Lanczos on `A^dagger A`.
pub fn operator_norm<T, F, G>(apply: F, apply_adjoint: G, dim: usize, opts: &LanczosOptions<T>) -> Result<T>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
    G: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    let (lam, _, _) = lanczos_extreme(|x| apply_adjoint(&apply(x)), dim, Extreme::Largest, opts)?;
    Ok(lam.max(T::zero()).sqrt())
}

/// Spectral norm of a Hermitian sparse matrix.
pub fn hermitian_norm_sparse<T: Real>(a: &CsrMatrix<T>, opts: &LanczosOptions<T>) -> Result<T> {
    if a.nnz() == 0 {
        return Ok(T::zero());
    }
    let (hi, _, _) = lanczos_extreme(|x| a.mul_vec(x), a.nrows(), Extreme::Largest, opts)?;
    let (lo, _, _) = lanczos_extreme(|x| a.mul_vec(x), a.nrows(), Extreme::Smallest, opts)?;
    Ok(hi.abs().max(lo.abs()))
}

/// Spectral norm of a dense Hermitian matrix.
pub fn hermitian_norm_dense<T: Real>(a: &DMatrix<Complex<T>>) -> T {
    T::hermitian_eigvals(a).iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Spectral norm of an arbitrary dense matrix.
pub fn operator_norm_dense<T: Real>(a: &DMatrix<Complex<T>>) -> T {
    let g = a.adjoint() * a;
    let top = T::hermitian_eigvals(&g).iter().fold(T::zero(), |m, v| m.max(*v));
    top.max(T::zero()).sqrt()
}

/// Full eigendecomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns; `None` means the identity (diagonal operator).
    vectors: Option<DMatrix<Complex<T>>>,
    /// Permutation applied when the operator was diagonal.
    order: Vec<usize>,
}

impl<T: Real> SpectralDecomposition<T> {
    /// Diagonal inputs are decomposed exactly, without a numerical eigensolve.
    pub fn of_sparse(a: &CsrMatrix<T>) -> Self {
        if a.is_diagonal() {
            let d = a.diagonal_real();
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(std::cmp::Ordering::Equal));
            let values = order.iter().map(|&k| d[k]).collect();
            return Self { values, vectors: None, order };
        }
        Self::of_dense(&a.to_dense())
    }

    pub fn of_dense(a: &DMatrix<Complex<T>>) -> Self {
        let (vals, vecs) = T::hermitian_eigh(a);
        let n = vals.len();
        Self { values: vals.iter().copied().collect(), vectors: Some(vecs), order: (0..n).collect() }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `k`-th eigenvector (ascending eigenvalue order).
    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        match &self.vectors {
            Some(v) => v.column(k).iter().copied().collect(),
            None => {
                let mut e = vec![czero(); self.dim()];
                e[self.order[k]] = Complex::new(T::one(), T::zero());
                e
            }
        }
    }

    /// Coefficients `<v_k | x>` for every eigenvector.
    pub fn coefficients(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        match &self.vectors {
            Some(v) => {
                let xv = DVector::from_column_slice(x);
                (v.adjoint() * xv).iter().copied().collect()
            }
            None => self.order.iter().map(|&i| x[i]).collect(),
        }
    }

    /// `sum_k c_k v_k`
    pub fn synthesize(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        match &self.vectors {
            Some(v) => (v * DVector::from_column_slice(coeffs)).iter().copied().collect(),
            None => {
                let mut out = vec![czero(); self.dim()];
                for (k, &i) in self.order.iter().enumerate() {
                    out[i] = coeffs[k];
                }
                out
            }
        }
    }

    /// `f(A) x`
    pub fn apply_function<F: Fn(T) -> Complex<T>>(&self, f: F, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let c: Vec<_> = self.coefficients(x).into_iter().zip(&self.values).map(|(c, &l)| c * f(l)).collect();
        self.synthesize(&c)
    }

    /// Dense `f(A)`; exactly diagonal when the decomposition is.
    pub fn function_matrix<F: Fn(T) -> Complex<T>>(&self, f: F) -> DMatrix<Complex<T>> {
        let n = self.dim();
        match &self.vectors {
            Some(v) => {
                let mut scaled = v.clone();
                for (k, &l) in self.values.iter().enumerate() {
                    let fl = f(l);
                    scaled.column_mut(k).iter_mut().for_each(|z| *z *= fl);
                }
                scaled * v.adjoint()
            }
            None => {
                let mut m = DMatrix::from_element(n, n, czero());
                for (k, &i) in self.order.iter().enumerate() {
                    m[(i, i)] = f(self.values[k]);
                }
                m
            }
        }
    }

    /// Block `f(A)[idx, idx]` without forming the full matrix.
    pub fn compressed_function<F: Fn(T) -> Complex<T>>(&self, idx: &[usize], f: F) -> DMatrix<Complex<T>> {
        let k = idx.len();
        match &self.vectors {
            Some(v) => {
                let rows = DMatrix::from_fn(k, self.dim(), |i, j| v[(idx[i], j)]);
                let mut scaled = rows.clone();
                for (c, &l) in self.values.iter().enumerate() {
                    let fl = f(l);
                    scaled.column_mut(c).iter_mut().for_each(|z| *z *= fl);
                }
                scaled * rows.adjoint()
            }
            None => {
                let mut pos = vec![usize::MAX; self.dim()];
                for (k, &i) in self.order.iter().enumerate() {
                    pos[i] = k;
                }
                DMatrix::from_fn(k, k, |a, b| if idx[a] == idx[b] { f(self.values[pos[idx[a]]]) } else { czero() })
            }
        }
    }

    pub fn is_exact_diagonal(&self) -> bool {
        self.vectors.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> CsrMatrix<f64> {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, Complex::new(i as f64 * 0.37 - 3.0, 0.0)));
            if i + 1 < n {
                let z = Complex::new(0.5, 0.25 * (i % 3) as f64);
                trip.push((i, i + 1, z));
                trip.push((i + 1, i, z.conj()));
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn lanczos_matches_dense_extremes() {
        let a = test_matrix(120);
        let vals = f64::hermitian_eigvals(&a.to_dense());
        let opts = LanczosOptions::default();
        let (lo, x, res) = lanczos_extreme(|v| a.mul_vec(v), 120, Extreme::Smallest, &opts).unwrap();
        let (hi, _, _) = lanczos_extreme(|v| a.mul_vec(v), 120, Extreme::Largest, &opts).unwrap();
        assert!((lo - vals[0]).abs() < 1e-9);
        assert!((hi - vals[119]).abs() < 1e-9);
        assert!(res < 1e-8);
        assert!((norm(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_of_nonhermitian() {
        let a = test_matrix(40);
        let b = a.matmul(&CsrMatrix::from_diagonal(&(0..40).map(|k| 1.0 / (1.0 + k as f64)).collect::<Vec<_>>()));
        let dense = operator_norm_dense(&b.to_dense());
        let bt = b.adjoint();
        let krylov = operator_norm(|x| b.mul_vec(x), |x| bt.mul_vec(x), 40, &LanczosOptions::default()).unwrap();
        assert!((dense - krylov).abs() < 1e-8 * dense);
    }

    #[test]
    fn cg_solves_shifted_system() {
        let a = test_matrix(60);
        let shift = 10.0;
        let rhs = random_unit::<f64>(60, 3);
        let x = conjugate_gradient(|v| a.add_scaled(&CsrMatrix::identity(60), Complex::new(shift, 0.0)).mul_vec(v), &rhs, 1e-13, 500).unwrap();
        let back = a.mul_vec(&x);
        for i in 0..60 {
            assert!((back[i] + x[i] * shift - rhs[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn diagonal_decomposition_is_exact() {
        let d = CsrMatrix::<f64>::from_diagonal(&[3.0, 1.0, 2.0]);
        let s = SpectralDecomposition::of_sparse(&d);
        assert!(s.is_exact_diagonal());
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
        let inv = s.function_matrix(|l| Complex::new(1.0 / l, 0.0));
        assert_eq!(inv[(0, 0)].re, 1.0 / 3.0);
        assert_eq!(s.vector(0)[1].re, 1.0);
    }
}
