use charged_pphi::fock::{ntau_check, FockBasis};
use charged_pphi::lattice::{MomentumLattice, NestedPair};
use charged_pphi::oneparticle::{lambda_quant, Profile};
use charged_pphi::Complex;
use proptest::prelude::*;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn number_estimate_holds(f in complex_vec(3), b in prop::collection::vec(0.05..5.0f64, 3)) {
        let basis = FockBasis::new(3, 3, 1000).unwrap();
        let (lhs, rhs) = ntau_check(&basis, &f, &b).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn projection_is_a_contraction(f in complex_vec(9)) {
        let pair = NestedPair::new(
            MomentumLattice::<f64>::with_integer_v(1, 1.0, 1.0).unwrap(),
            MomentumLattice::<f64>::with_integer_v(1, 3.0, 1.0).unwrap(),
        ).unwrap();
        let norm = |v: &[Complex<f64>]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let p = pair.project(&f[..pair.fine().len()]).unwrap();
        prop_assert!(norm(&p) <= norm(&f[..pair.fine().len()]) * (1.0 + 1e-14));
    }

    #[test]
    fn threshold_scales_inversely_with_amplitude(amp in 0.05..3.0f64) {
        let l = MomentumLattice::<f64>::with_integer_v(2, 2.0, 1.0).unwrap();
        let base = lambda_quant(&Profile::gaussian(1.0, 1.0), &l).unwrap().lambda_quant.to_f64();
        let scaled = lambda_quant(&Profile::gaussian(amp, 1.0), &l).unwrap().lambda_quant.to_f64();
        prop_assert!((scaled * amp - base).abs() <= 1e-9 * base);
    }
}

#[test]
fn single_precision_pipeline() {
    use charged_pphi::hamiltonian::{assemble, AssemblyOptions, InteractionSpec, Monomial};
    use charged_pphi::spectral::{ground_state, SpectralOptions};
    let l = MomentumLattice::<f32>::with_integer_v(1, 1.0, 1.0).unwrap();
    let basis = FockBasis::new(l.len(), 2, 1000).unwrap();
    let spec = InteractionSpec::new(vec![Monomial::new(4, 0, 1.0f32), Monomial::new(0, 4, 1.0)], Profile::gaussian(1.0, 1.0)).unwrap();
    let b = assemble(&spec, &Profile::gaussian(0.2f32, 1.0), 0.3, &basis, &l, AssemblyOptions::default()).unwrap();
    let (e32, _) = ground_state(&b.h, &SpectralOptions::default()).unwrap();

    let l64 = MomentumLattice::<f64>::with_integer_v(1, 1.0, 1.0).unwrap();
    let spec64 = InteractionSpec::new(vec![Monomial::new(4, 0, 1.0), Monomial::new(0, 4, 1.0)], Profile::gaussian(1.0, 1.0)).unwrap();
    let b64 = assemble(&spec64, &Profile::gaussian(0.2, 1.0), 0.3, &basis, &l64, AssemblyOptions::default()).unwrap();
    let (e64, _) = ground_state(&b64.h, &SpectralOptions::default()).unwrap();
    assert!((e32 as f64 - e64).abs() < 1e-5, "{e32} vs {e64}");
}
