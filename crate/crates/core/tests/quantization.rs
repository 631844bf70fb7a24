use charged_pphi::oneparticle::Profile;
use charged_pphi::quantization::*;
use charged_pphi::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(points: usize, amplitude: f64) -> PhaseSpaceGrid<f64> {
    PhaseSpaceGrid::from_potential(points, 0.25, 1.0, &Profile::gaussian(amplitude, 1.0)).unwrap()
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn free_spectrum_matches_dispersion() {
    let g = grid(64, 0.0);
    let ks = polar_decompose(&build_generator(&g).unwrap()).unwrap();
    assert!(free_spectrum_error(&g, &ks.h_spectrum) <= 1e-10);
    let disp = g.dispersion();
    let min = disp.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 1.0).abs() < 1e-15);
}

#[test]
fn free_polar_part_is_the_canonical_structure() {
    let g = grid(32, 0.0);
    let ks = polar_decompose(&build_generator(&g).unwrap()).unwrap();
    let j0 = free_complex_structure(&g);
    assert!((&ks.j - &j0).amax() < 1e-10);
}

#[test]
fn interacting_structure_invariants() {
    let g = grid(64, 0.2);
    let gen = build_generator(&g).unwrap();
    assert!(gen.antisymmetry_residual() <= 1e-10);
    let ks = polar_decompose(&gen).unwrap();
    assert!(ks.j_square_residual() <= 1e-10);
    assert!(ks.reconstruction_residual(&gen) <= 1e-10);
    assert!(ks.form_min_eigenvalue() > 0.0);
    // j is metric-orthogonal and commutes with h
    let s = &gen.metric;
    let scale = s.amax();
    assert!((ks.j.transpose() * s * &ks.j - s).amax() <= 1e-9 * scale);
    assert!((&ks.j * &ks.h - &ks.h * &ks.j).amax() <= 1e-9 * ks.h.amax());
    assert!(ks.h_spectrum[0] >= 0.9);
}

#[test]
fn quantize_reports_all_checks() {
    let (_, rep) = quantize(&grid(32, 0.2)).unwrap();
    assert!(rep.delta > 0.0 && rep.delta < 1.0);
    assert!(rep.j_square_residual <= 1e-10);
    assert!(rep.reconstruction_residual <= 1e-10);
    assert!(rep.free_check_error <= 1e-10);
    assert!(rep.min_spec_h >= 0.9);
}

#[test]
fn positivity_margin_is_linear_and_gates_quantization() {
    let d = positivity_margin(&grid(32, 0.2));
    assert!((positivity_margin(&grid(32, 0.6)) - 3.0 * d).abs() < 1e-12);
    assert_eq!(positivity_margin(&grid(32, 0.0)), 0.0);
    let strong = grid(32, 0.2 / d * 1.05);
    assert!(matches!(quantize(&strong), Err(Error::Unstable { .. })));
}

#[test]
fn dynamical_inner_product_is_sesquilinear_and_positive() {
    let g = grid(16, 0.2);
    let ks = polar_decompose(&build_generator(&g).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let y1 = random_vector(64, &mut rng);
        let y2 = random_vector(64, &mut rng);
        let base = ks.dyn_inner(&y1, &y2).unwrap();
        let right = ks.dyn_inner(&y1, &(&ks.j * &y2)).unwrap();
        let left = ks.dyn_inner(&(&ks.j * &y1), &y2).unwrap();
        let i = nalgebra::Complex::new(0.0, 1.0);
        let tol = 1e-10 * (1.0 + base.norm());
        assert!((right - i * base).norm() < tol);
        assert!((left + i * base).norm() < tol);
        let swapped = ks.dyn_inner(&y2, &y1).unwrap();
        assert!((swapped - base.conj()).norm() < tol);
        let diag = ks.dyn_inner(&y1, &y1).unwrap();
        assert!(diag.re > 0.0 && diag.im.abs() < 1e-12 * diag.re);
    }
    assert!(ks.dyn_inner(&DVector::zeros(3), &DVector::zeros(64)).is_err());
}

#[test]
fn free_identification_transports_norms_and_intertwines() {
    let g = grid(16, 0.0);
    let ks = polar_decompose(&build_generator(&g).unwrap()).unwrap();
    let j0 = free_complex_structure(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (z1, z2) = free_identification(&g, &DVector::zeros(64)).unwrap();
    assert!(z1.iter().chain(&z2).all(|z| z.norm() == 0.0));
    for _ in 0..10 {
        let y = random_vector(64, &mut rng);
        let (u1, u2) = free_identification(&g, &y).unwrap();
        let norm2 = l2_inner(&u1, &u1).re + l2_inner(&u2, &u2).re;
        let dyn0 = ks.dyn_inner(&y, &y).unwrap().re;
        assert!((norm2 - dyn0).abs() <= 1e-12 * dyn0);
        let (w1, w2) = free_identification(&g, &(&j0 * &y)).unwrap();
        let i = nalgebra::Complex::new(0.0, 1.0);
        for (a, b) in w1.iter().zip(&u1).chain(w2.iter().zip(&u2)) {
            assert!((a - i * b).norm() < 1e-12);
        }
    }
}

#[test]
fn time_reversal_anticommutes_with_generator() {
    let g = grid(16, 0.2);
    let gen = build_generator(&g).unwrap();
    let k = time_reversal_matrix::<f64>(16);
    assert!((&k * &gen.matrix * &k + &gen.matrix).amax() <= 1e-12);
    assert_eq!(&k * &k, DMatrix::identity(64, 64));
    // zero momentum, real field: fixed
    let mut y = DVector::zeros(64);
    for i in 32..48 {
        y[i] = (i as f64).cos();
    }
    assert_eq!(time_reversal(&y), y);
}
