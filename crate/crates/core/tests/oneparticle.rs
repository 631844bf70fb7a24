use charged_pphi::lattice::{MomentumLattice, NestedPair};
use charged_pphi::oneparticle::*;
use charged_pphi::{Complex, Real};
use nalgebra::DMatrix;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn lat(v: i64, kappa: f64) -> MomentumLattice<f64> {
    MomentumLattice::with_integer_v(v, kappa, 1.0).unwrap()
}

fn random_sampled(seed: u64) -> Profile<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    Profile::Sampled(SampledProfile::new(-4.0, 0.125, vals).unwrap())
}

fn builtin_potentials() -> Vec<Profile<f64>> {
    vec![
        Profile::gaussian(1.0, 1.0),
        Profile::gaussian(0.3, 0.4),
        Profile::lorentzian(1.0, 1.0),
        Profile::lorentzian(0.5, 2.5),
        random_sampled(3),
    ]
}

fn hermitian_defect(a: &DMatrix<C>) -> f64 {
    (a - a.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn max_abs(a: &DMatrix<C>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[test]
fn project_is_a_conjugation_equivariant_contraction() {
    let pair = NestedPair::new(lat(1, 2.0), lat(4, 2.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nf = pair.fine().len();
    let nc = pair.coarse().len();
    // dense matrix of the projection, one fine unit vector at a time
    let mut p = DMatrix::<C>::zeros(nc, nf);
    for k in 0..nf {
        let mut e = vec![C::new(0.0, 0.0); nf];
        e[k] = C::new(1.0, 0.0);
        for (i, z) in pair.project(&e).unwrap().into_iter().enumerate() {
            p[(i, k)] = z;
        }
    }
    let pp = &p * p.adjoint();
    assert!((pp - DMatrix::<C>::identity(nc, nc)).iter().all(|z| z.norm() < 1e-14));
    for _ in 0..20 {
        let f: Vec<C> = (0..nf).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let pf = pair.project(&f).unwrap();
        let n = |x: &[C]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(n(&pf) <= n(&f) * (1.0 + 1e-14));
        let conj: Vec<C> = f.iter().map(|z| z.conj()).collect();
        let pc = pair.project(&conj).unwrap();
        for (a, b) in pc.iter().zip(&pf) {
            assert!((a - b.conj()).norm() < 1e-15);
        }
    }
    assert!(pair.project(&[C::new(1.0, 0.0)]).is_err());
}

#[test]
fn embed_project_is_an_orthogonal_projection() {
    let pair = NestedPair::new(lat(2, 1.0), lat(4, 1.0)).unwrap();
    let nf = pair.fine().len();
    let q = DMatrix::<C>::from_fn(nf, nf, |i, k| {
        let mut e = vec![C::new(0.0, 0.0); nf];
        e[k] = C::new(1.0, 0.0);
        pair.embed(&pair.project(&e).unwrap()).unwrap()[i]
    });
    assert!(max_abs(&(&q * &q - &q)) < 1e-14);
    assert!(hermitian_defect(&q) < 1e-15);
}

#[test]
fn cell_constant_vectors_project_isometrically() {
    let pair = NestedPair::new(lat(1, 1.0), lat(3, 1.0)).unwrap();
    let cell: Vec<usize> = pair.cell(1).collect();
    let mut f = vec![C::new(0.0, 0.0); pair.fine().len()];
    for &k in &cell {
        f[k] = C::new(0.5, 0.0);
    }
    let pf = pair.project(&f).unwrap();
    let norm_f: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!((pf[1].norm() - norm_f).abs() < 1e-15);
    assert!(pf.iter().enumerate().all(|(i, z)| i == 1 || z.norm() == 0.0));
}

#[test]
fn rational_lattice_nests_in_integer_refinement() {
    let coarse = MomentumLattice::<f64>::new(Rational64::new(3, 2), 2.0, 1.0).unwrap();
    let fine = MomentumLattice::<f64>::new(Rational64::from_integer(3), 2.0, 1.0).unwrap();
    let pair = NestedPair::new(coarse, fine).unwrap();
    assert_eq!(pair.ratio(), 2);
    for (i, &k) in pair.mode_injection().iter().enumerate() {
        assert_eq!(pair.coarse().momenta()[i], pair.fine().momenta()[k]);
    }
}

#[test]
fn potential_matrix_is_hermitian_for_real_potentials() {
    for seed in 0..5 {
        let v = random_sampled(seed);
        for l in [lat(2, 3.0), lat(5, 1.4)] {
            let m = potential_matrix(&v, &l);
            assert!(hermitian_defect(&m) <= 1e-12 * max_abs(&m).max(1.0));
        }
    }
}

#[test]
fn b_is_anti_hermitian_and_omega_hermitian() {
    for v in builtin_potentials() {
        let l = lat(3, 2.0);
        let b = b_matrix(&v, &l);
        let anti = &b + b.adjoint();
        assert!(max_abs(&anti) <= 1e-12 * max_abs(&b).max(1.0), "{}", v.label());
        let w = omega_block(0.4, &v, &l).matrix();
        assert!(hermitian_defect(&w) <= 1e-12 * max_abs(&w));
    }
}

#[test]
fn b_of_constant_potential_is_diagonal_closed_form() {
    let l = lat(2, 2.0);
    let b = b_matrix(&Profile::Constant { value: -0.4 }, &l);
    for i in 0..l.len() {
        for j in 0..l.len() {
            let expected = if i == j { C::new(0.0, -0.4) } else { C::new(0.0, 0.0) };
            assert!((b[(i, j)] - expected).norm() < 1e-15);
        }
    }
}

#[test]
fn zero_potential_gives_zero_objects() {
    let l = lat(2, 2.0);
    assert!(max_abs(&potential_matrix(&Profile::Zero, &l)) == 0.0);
    assert!(max_abs(&b_matrix(&Profile::Zero, &l)) == 0.0);
    assert_eq!(pair_kernel(&Profile::Zero, &l).frobenius(), 0.0);
}

#[test]
fn pair_kernel_is_antisymmetric_and_bounded() {
    for v in builtin_potentials() {
        let l = lat(4, 3.0);
        let r = pair_kernel(&v, &l);
        let m = r.matrix();
        for i in 0..l.len() {
            assert_eq!(m[(i, i)], C::new(0.0, 0.0));
            for j in 0..l.len() {
                assert_eq!(m[(i, j)], -m[(j, i)]);
            }
        }
        assert!(r.bound_violations(&v, &l).is_empty());
    }
}

#[test]
fn gaussian_kernel_frobenius_below_bound_matrix() {
    let v = Profile::gaussian(1.0, 1.0);
    let l = lat(4, 4.0);
    let r = pair_kernel(&v, &l);
    let (k, e) = (l.momenta(), l.eps());
    let mut bound2 = 0.0;
    for i in 0..l.len() {
        for j in 0..l.len() {
            let b = v.derivative_fourier(k[i] + k[j]).norm() / (e[i] * e[j]).sqrt() * l.spacing();
            bound2 += b * b;
        }
    }
    let bound = bound2.sqrt() / (4.0 * std::f64::consts::PI);
    assert!(r.frobenius() <= bound);
}

#[test]
fn kernel_frobenius_matches_c1_on_symmetric_lattices() {
    // reflecting the second momentum maps |V^(γ - γ')| onto |V^(γ + γ')|, so c1 = 2 ‖R‖_F
    let v = Profile::gaussian(0.8, 1.3);
    for l in [lat(2, 2.0), lat(3, 4.0)] {
        let c1 = lambda_quant(&v, &l).unwrap().c1;
        let r = pair_kernel(&v, &l).frobenius();
        assert!((c1 - 2.0 * r).abs() <= 1e-12 * c1);
    }
}

#[test]
fn lambda_quant_scales_inversely() {
    let l = lat(4, 4.0);
    let base = lambda_quant(&Profile::gaussian(1.0, 1.0), &l).unwrap().lambda_quant.finite().unwrap();
    for t in [0.1, 2.0, 7.5] {
        let scaled = lambda_quant(&Profile::gaussian(t, 1.0), &l).unwrap().lambda_quant.finite().unwrap();
        assert!((scaled * t - base).abs() <= 1e-12 * base);
    }
    let sampled = random_sampled(5);
    let a = lambda_quant(&sampled, &l).unwrap().lambda_quant.finite().unwrap();
    let b = lambda_quant(&sampled.scaled(3.0), &l).unwrap().lambda_quant.finite().unwrap();
    assert!((3.0 * b - a).abs() <= 1e-12 * a);
}

/// `(c0, c1, λ_quant)` from a dense eigensolve and an elementwise Frobenius sum.
fn dense_threshold(v: &Profile<f64>, l: &MomentumLattice<f64>) -> (f64, f64, f64) {
    let m = potential_matrix(v, l);
    let e = l.eps();
    let n = l.len();
    let a = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * (1.0 / e[i] + 1.0 / e[j]));
    let ev = f64::hermitian_eigvals(&a);
    let c0 = 0.5 * ev.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let mut c1 = 0.0;
    for i in 0..n {
        for j in 0..n {
            c1 += (m[(i, j)] * (e[j] - e[i]) / (e[i] * e[j]).sqrt()).norm_sqr();
        }
    }
    let c1 = c1.sqrt();
    (c0, c1, 1.0 / (c0 + c1 / l.mass()))
}

#[test]
fn lambda_quant_golden_value() {
    let v = Profile::gaussian(1.0, 1.0);
    let rep = lambda_quant(&v, &lat(8, 32.0)).unwrap();
    let golden = 0.874_684_249_893_672_1;
    let lq = rep.lambda_quant.finite().unwrap();
    assert!((lq - golden).abs() <= 1e-9 * golden, "{lq}");

    // the finer lattice runs the Krylov norm; the oracle runs a dense eigensolve
    let fine = lat(16, 64.0);
    let (c0, c1, oracle) = dense_threshold(&v, &fine);
    let krylov = lambda_quant(&v, &fine).unwrap();
    assert!((krylov.c0 - c0).abs() <= 1e-9 * c0);
    assert!((krylov.c1 - c1).abs() <= 1e-9 * c1);
    assert!((oracle - golden).abs() / oracle <= 1e-2);
}

#[test]
fn dense_threshold_agrees_below_krylov_limit() {
    for v in builtin_potentials() {
        let l = lat(3, 3.0);
        let rep = lambda_quant(&v, &l).unwrap();
        let (c0, c1, lq) = dense_threshold(&v, &l);
        assert!((rep.c0 - c0).abs() <= 1e-12 * c0);
        assert!((rep.c1 - c1).abs() <= 1e-10 * c1);
        assert!((rep.lambda_quant.finite().unwrap() - lq).abs() <= 1e-10 * lq);
    }
}

#[test]
fn coupling_constants_stabilize_under_refinement() {
    let v = Profile::gaussian(1.0, 1.0);
    let a = lambda_quant(&v, &lat(4, 64.0)).unwrap();
    let b = lambda_quant(&v, &lat(8, 128.0)).unwrap();
    assert!((a.c0 - b.c0).abs() / b.c0 <= 1e-2);
    assert!((a.c1 - b.c1).abs() / b.c1 <= 1e-2);
}

#[test]
fn omega_stays_positive_below_threshold_and_crosses_above() {
    for v in builtin_potentials() {
        let l = lat(2, 4.0);
        let lq = lambda_quant(&v, &l).unwrap().lambda_quant.finite().unwrap();
        for frac in [0.25, 0.5, 0.9, 0.99] {
            assert!(omega_block(frac * lq, &v, &l).min_eigenvalue() > 0.0, "{}", v.label());
            assert!(omega_block(-frac * lq, &v, &l).min_eigenvalue() > 0.0);
        }
        // bisection for the first λ with a nonpositive eigenvalue
        let mut hi = lq;
        while omega_block(hi, &v, &l).min_eigenvalue() > 0.0 {
            hi *= 2.0;
            assert!(hi < 1e6 * lq);
        }
        let mut lo = lq;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if omega_block(mid, &v, &l).min_eigenvalue() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(hi >= lq, "{}: crossing {hi} below threshold {lq}", v.label());
    }
}

#[test]
fn weighted_kernel_norm_special_cases_and_refinement() {
    let l = lat(2, 2.0);
    let zero = pair_kernel(&Profile::Zero, &l);
    assert_eq!(weighted_kernel_norm(&zero, 1.0, &l).unwrap(), 0.0);
    let r = pair_kernel(&Profile::gaussian(1.0, 1.0), &l);
    assert!((weighted_kernel_norm(&r, 0.0, &l).unwrap() - r.frobenius()).abs() < 1e-14);

    let v = Profile::gaussian(1.0, 1.0);
    let values: Vec<f64> = [(4, 8.0), (8, 16.0), (16, 32.0)]
        .iter()
        .map(|&(vv, k)| {
            let l = lat(vv, k);
            weighted_kernel_norm(&pair_kernel(&v, &l), 1.0, &l).unwrap()
        })
        .collect();
    let ratio = values[2] / values[1];
    assert!((0.9..=1.1).contains(&ratio), "{values:?}");
}

#[test]
fn weyl_gaussian_hilbert_schmidt_norm() {
    let op = weyl_quantize(|x: f64, k: f64| C::new((-(x * x + k * k) / 2.0).exp(), 0.0), &WeylGrid::balanced(128)).unwrap();
    let hs: f64 = op.iter().map(|z| z.norm_sqr()).sum();
    assert!((hs - 0.5).abs() < 5e-3, "{hs}");
}

#[test]
fn weyl_of_momentum_symbol_is_fourier_multiplier() {
    let grid = WeylGrid::<f64>::balanced(32);
    let n = grid.n;
    let symbol = |k: f64| C::new(1.0 / (1.0 + k * k), 0.3 * k.sin());
    let op = weyl_quantize(|_, k| symbol(k), &grid).unwrap();
    // diagonalize with the FFT: columns of op applied to FFT basis vectors
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    for l in 0..n {
        let k = grid.k(l);
        let wave: Vec<C> = (0..n).map(|i| C::from_polar(1.0, k * grid.x(i))).collect();
        let image = &op * nalgebra::DVector::from_vec(wave.clone());
        let mut spec: Vec<C> = image.iter().cloned().collect();
        fft.process(&mut spec);
        let mut base = wave;
        fft.process(&mut base);
        // a plane wave has a single nonzero Fourier coefficient; op scales it by a(k)
        let peak = (0..n).max_by(|&a, &b| base[a].norm().partial_cmp(&base[b].norm()).unwrap()).unwrap();
        let ratio = spec[peak] / base[peak];
        assert!((ratio - symbol(k)).norm() < 1e-12, "l={l}");
        for q in (0..n).filter(|&q| q != peak) {
            assert!(spec[q].norm() < 1e-11);
        }
    }
}
