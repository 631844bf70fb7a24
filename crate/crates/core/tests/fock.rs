use charged_pphi::fock::*;
use charged_pphi::lattice::{MomentumLattice, NestedPair};
use charged_pphi::sparse::CsrMatrix;
use charged_pphi::{Complex, Error};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn unit(dim: usize, i: usize) -> Vec<C> {
    let mut v = vec![c(0.0); dim];
    v[i] = c(1.0);
    v
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let a = DMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

fn max_diff(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> f64 {
    a.sub(b).max_abs()
}

#[test]
fn basis_dimensions_from_lattice() {
    let l = MomentumLattice::<f64>::with_integer_v(1, 1.0, 1.0).unwrap();
    assert_eq!(l.len(), 3);
    assert_eq!(enumerate_basis(&l, 2, DEFAULT_DIMENSION_CAP).unwrap().dim(), 28);
    assert_eq!(enumerate_basis(&l, 0, DEFAULT_DIMENSION_CAP).unwrap().dim(), 1);
    let err = enumerate_basis(&l, 8, 100).unwrap_err();
    assert!(matches!(err, Error::Resource { cap: 100, .. }));
    assert!(err.to_string().contains("100"));
}

#[test]
fn creation_examples() {
    let b = FockBasis::new(2, 3, 1000).unwrap();
    let ad = creation::<f64>(&b, Species::One, 1).unwrap();
    let one = b.index_of(&[0, 1, 0, 0]).unwrap();
    let two = b.index_of(&[0, 2, 0, 0]).unwrap();
    assert_eq!(ad.apply(&unit(b.dim(), 0)), unit(b.dim(), one));
    assert!((ad.matrix.get(two, one).re - 2f64.sqrt()).abs() < 1e-15);
    let a = annihilation::<f64>(&b, Species::One, 1).unwrap();
    assert!(a.apply(&unit(b.dim(), 0)).iter().all(|z| *z == c(0.0)));
    // the top sector is annihilated by creators
    for i in (0..b.dim()).filter(|&i| b.particle_number(i) == 3) {
        assert!(ad.apply(&unit(b.dim(), i)).iter().all(|z| *z == c(0.0)));
    }
    assert!(creation::<f64>(&b, Species::Two, 2).is_err());
}

#[test]
fn canonical_commutation_on_safe_sector() {
    let b = FockBasis::new(3, 4, DEFAULT_DIMENSION_CAP).unwrap();
    let safe: Vec<usize> = (0..b.dim()).filter(|&i| b.particle_number(i) < b.n_max()).collect();
    let all: Vec<usize> = (0..b.dim()).collect();
    let id = CsrMatrix::<f64>::identity(b.dim());
    let ops: Vec<(Species, usize)> = Species::BOTH.iter().flat_map(|&s| (0..3).map(move |m| (s, m))).collect();
    for &(si, i) in &ops {
        let a = annihilation::<f64>(&b, si, i).unwrap().matrix;
        for &(sj, j) in &ops {
            let ad = creation::<f64>(&b, sj, j).unwrap().matrix;
            let mut comm = a.commutator(&ad);
            if (si, i) == (sj, j) {
                comm = comm.sub(&id);
            }
            assert!(comm.submatrix(&all, &safe).max_abs() <= 1e-13);
            let aj = annihilation::<f64>(&b, sj, j).unwrap().matrix;
            assert!(a.commutator(&aj).max_abs() <= 1e-13);
        }
    }
}

#[test]
fn dgamma_of_identity_is_number_operator() {
    let b = FockBasis::new(3, 3, 1000).unwrap();
    let id = DMatrix::<C>::identity(6, 6);
    let n = dgamma(&b, &id).unwrap();
    assert_eq!(n.matrix, number_operator::<f64>(&b).matrix);
    for i in 0..b.dim() {
        assert_eq!(n.matrix.get(i, i).re, b.particle_number(i) as f64);
    }
}

#[test]
fn dgamma_of_dispersion_on_one_particle_states() {
    let l = MomentumLattice::<f64>::with_integer_v(2, 1.0, 1.0).unwrap();
    let b = enumerate_basis(&l, 2, 1000).unwrap();
    let e = DMatrix::from_fn(l.len(), l.len(), |i, j| if i == j { c(l.eps()[i]) } else { c(0.0) });
    let h = dgamma_both_species(&b, &e).unwrap();
    for sp in Species::BOTH {
        for g in 0..l.len() {
            let s = b.slot(sp, g);
            let mut occ = vec![0u8; b.slot_count()];
            occ[s] = 1;
            let i = b.index_of(&occ).unwrap();
            let out = h.apply(&unit(b.dim(), i));
            for (k, z) in out.iter().enumerate() {
                let expected = if k == i { l.eps()[g] } else { 0.0 };
                assert!((z - c(expected)).norm() < 1e-15);
            }
        }
    }
}

#[test]
fn dgamma_two_particle_block_matches_tensor_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = FockBasis::new(2, 2, 1000).unwrap();
    let s = b.slot_count();
    let h = random_hermitian(s, &mut rng);
    let op = dgamma(&b, &h).unwrap().matrix.to_dense();

    // symmetric tensors for every two-particle basis state
    let two: Vec<usize> = (0..b.dim()).filter(|&i| b.particle_number(i) == 2).collect();
    let embed = DMatrix::from_fn(s * s, two.len(), |row, col| {
        let slots = b.state_slots(two[col]);
        let (x, y) = (slots[0] as usize, slots[1] as usize);
        let (r1, r2) = (row / s, row % s);
        if x == y {
            c(if r1 == x && r2 == x { 1.0 } else { 0.0 })
        } else if (r1, r2) == (x, y) || (r1, r2) == (y, x) {
            c(std::f64::consts::FRAC_1_SQRT_2)
        } else {
            c(0.0)
        }
    });
    let id = DMatrix::<C>::identity(s, s);
    let tensor_sum = h.kronecker(&id) + id.kronecker(&h);
    let oracle = embed.adjoint() * tensor_sum * &embed;
    for (a, &i) in two.iter().enumerate() {
        for (bb, &j) in two.iter().enumerate() {
            assert!((op[(i, j)] - oracle[(a, bb)]).norm() < 1e-13);
        }
    }
}

#[test]
fn dgamma_commutes_with_number_and_rejects_non_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = FockBasis::new(3, 3, 1000).unwrap();
    let h = random_hermitian(6, &mut rng);
    let dg = dgamma(&b, &h).unwrap();
    assert_eq!(dg.matrix, dg.matrix.adjoint());
    assert!(dg.matrix.commutator(&number_operator::<f64>(&b).matrix).max_abs() < 1e-13);
    assert_eq!(dg.matrix.get(0, 0), c(0.0));
    let mut bad = h.clone();
    bad[(0, 1)] += c(0.5);
    assert!(matches!(dgamma(&b, &bad), Err(Error::Contract(_))));
}

#[test]
fn wick_constant_and_single_creator() {
    let b = FockBasis::new(2, 2, 1000).unwrap();
    let k = WickKernel::constant(c(2.5), 2);
    assert_eq!(wick_operator(&b, &k).unwrap().matrix, CsrMatrix::identity(b.dim()).scale_real(2.5));

    let mut w = WickKernel::<f64>::zeros(1, 0, vec![Species::Two], 2).unwrap();
    w.coeffs[1] = c(1.0);
    assert_eq!(wick_operator(&b, &w).unwrap().matrix, creation::<f64>(&b, Species::Two, 1).unwrap().matrix);
}

#[test]
fn wick_one_one_kernel_matches_dgamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = FockBasis::new(3, 3, 1000).unwrap();
    // diagonal kernel on species one
    let mut w = WickKernel::<f64>::zeros(1, 1, vec![Species::One, Species::One], 3).unwrap();
    let weights: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();
    for (i, &x) in weights.iter().enumerate() {
        let idx = w.flat_index(&[i, i]);
        w.coeffs[idx] = c(x);
    }
    let mut slot_weights = weights.clone();
    slot_weights.extend([0.0; 3]);
    let diag = dgamma_diagonal::<f64>(&b, &slot_weights).unwrap();
    assert!(max_diff(&wick_operator(&b, &w).unwrap().matrix, &diag.matrix) < 1e-14);

    // off-diagonal species block against the full dGamma
    let blk = DMatrix::from_fn(3, 3, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut w12 = WickKernel::<f64>::zeros(1, 1, vec![Species::One, Species::Two], 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let idx = w12.flat_index(&[i, j]);
            w12.coeffs[idx] = blk[(i, j)];
        }
    }
    let full = DMatrix::from_fn(6, 6, |r, cc| match (r / 3, cc / 3) {
        (0, 1) => blk[(r % 3, cc % 3)],
        (1, 0) => blk[(cc % 3, r % 3)].conj(),
        _ => c(0.0),
    });
    let sum = wick_operator(&b, &w12).unwrap().matrix.add(&wick_operator(&b, &w12.adjoint()).unwrap().matrix);
    assert!(max_diff(&sum, &dgamma(&b, &full).unwrap().matrix) < 1e-14);
}

#[test]
fn wick_vacuum_expectation_vanishes_and_adjoint_is_structural() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = FockBasis::new(2, 4, 1000).unwrap();
    for (p, q) in [(1, 0), (0, 2), (2, 2), (3, 1), (4, 0)] {
        let sp: Vec<Species> = (0..p + q).map(|i| if i % 2 == 0 { Species::One } else { Species::Two }).collect();
        let mut w = WickKernel::<f64>::zeros(p, q, sp, 2).unwrap();
        let coeffs = random_vec(w.coeffs.len(), &mut rng);
        w.coeffs = coeffs;
        let w = w.symmetrize();
        assert!(w.symmetry_defect() < 1e-15);
        let op = wick_operator(&b, &w).unwrap();
        assert_eq!(op.matrix.get(0, 0), c(0.0));
        assert_eq!(op.adjoint().matrix, wick_operator(&b, &w.adjoint()).unwrap().matrix);
    }
}

#[test]
fn field_operator_vacuum_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let b = FockBasis::new(3, 3, 1000).unwrap();
    let f = random_vec(3, &mut rng);
    let norm2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
    for sp in Species::BOTH {
        let phi = field_operator(&b, sp, &f).unwrap();
        assert_eq!(phi.matrix, phi.matrix.adjoint());
        let v = phi.apply(&unit(b.dim(), 0));
        assert_eq!(v[0], c(0.0));
        let second: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((second - norm2 / 2.0).abs() < 1e-14);
    }
    assert!(field_operator(&b, Species::One, &f[..2]).is_err());
}

#[test]
fn fields_of_different_species_commute_below_the_cap() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let b = FockBasis::new(3, 4, DEFAULT_DIMENSION_CAP).unwrap();
    let phi1 = field_operator(&b, Species::One, &random_vec(3, &mut rng)).unwrap();
    let phi2 = field_operator(&b, Species::Two, &random_vec(3, &mut rng)).unwrap();
    let comm = phi1.matrix.commutator(&phi2.matrix);
    let rows: Vec<usize> = (0..b.dim()).collect();
    let cols: Vec<usize> = (0..b.dim()).filter(|&i| b.particle_number(i) + 2 <= b.n_max()).collect();
    assert!(comm.submatrix(&rows, &cols).max_abs() < 1e-13);
}

#[test]
fn number_estimate_examples() {
    let b = FockBasis::new(3, 3, 1000).unwrap();
    let (lhs, rhs) = ntau_check::<f64>(&b, &unit(3, 1), &[1.0; 3]).unwrap();
    assert!(lhs <= 1.0 + 1e-14 && (rhs - 1.0).abs() < 1e-15);
    assert_eq!(ntau_check::<f64>(&b, &[c(0.0); 3], &[1.0; 3]).unwrap(), (0.0, 0.0));
    assert!(ntau_check::<f64>(&b, &unit(3, 0), &[1.0, 0.0, 1.0]).is_err());

    let l = MomentumLattice::<f64>::with_integer_v(1, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let f = random_vec(3, &mut rng);
        let (lhs, rhs) = ntau_check(&b, &f, l.eps()).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}

#[test]
fn coarse_states_embed_with_identical_occupations() {
    let pair = NestedPair::new(
        MomentumLattice::<f64>::with_integer_v(1, 1.0, 1.0).unwrap(),
        MomentumLattice::<f64>::with_integer_v(2, 1.0, 1.0).unwrap(),
    )
    .unwrap();
    let coarse = enumerate_basis(pair.coarse(), 2, 1000).unwrap();
    let fine = enumerate_basis(pair.fine(), 2, 1000).unwrap();
    let idx = fine.embedding_indices(&coarse, pair.mode_injection()).unwrap();
    assert_eq!(idx.len(), coarse.dim());
    let inj = pair.mode_injection();
    for (i, &k) in idx.iter().enumerate() {
        let occ_c = coarse.occupations(i);
        let occ_f = fine.occupations(k);
        for sp in Species::BOTH {
            for (m, &fm) in inj.iter().enumerate() {
                assert_eq!(occ_c[coarse.slot(sp, m)], occ_f[fine.slot(sp, fm)]);
            }
        }
        assert_eq!(coarse.particle_number(i), fine.particle_number(k));
    }
}
