//! Momentum lattices `{ j / v : |j / v| <= kappa }` and maps between nested ones.

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{lit, Complex, Real};

/// Relative slack when deciding whether `kappa * v` sits on an integer.
const FLOOR_SLACK: f64 = 1e-9;

/// Finite symmetric set of momenta with spacing `1/v` and cutoff `kappa`.
///
/// Modes are stored as integer labels `j` with momentum `j / v`; momenta are
/// evaluated from the reduced fraction, so equal momenta on different lattices
/// give bitwise equal floats.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumLattice<T: Real> {
    v: Rational64,
    kappa: T,
    mass: T,
    jmax: i64,
    momenta: Vec<T>,
    eps: Vec<T>,
}

impl<T: Real> MomentumLattice<T> {
    /// Builds the lattice; requires `v > 0`, `m > 0` and `kappa >= 1/v`.
    pub fn new(v: Rational64, kappa: T, mass: T) -> Result<Self> {
        if !v.is_positive() {
            return Err(Error::Parameter(format!("inverse spacing v must be positive, got {v}")));
        }
        if !(kappa > T::zero()) {
            return Err(Error::Parameter(format!("cutoff kappa must be positive, got {kappa}")));
        }
        if !(mass > T::zero()) {
            return Err(Error::Parameter(format!("mass must be positive, got {mass}")));
        }
        let jmax = floor_scaled(kappa, v);
        if jmax < 1 {
            return Err(Error::Parameter(format!("cutoff kappa={kappa} is below the spacing 1/v={}", v.recip())));
        }
        let momenta: Vec<T> = (-jmax..=jmax).map(|j| rational_value(Rational64::from_integer(j) / v)).collect();
        let eps = momenta.iter().map(|&k| (k * k + mass * mass).sqrt()).collect();
        Ok(Self { v, kappa, mass, jmax, momenta, eps })
    }

    /// Convenience constructor for integer `v`.
    pub fn with_integer_v(v: i64, kappa: T, mass: T) -> Result<Self> {
        Self::new(Rational64::from_integer(v), kappa, mass)
    }

    pub fn v(&self) -> Rational64 {
        self.v
    }

    pub fn v_real(&self) -> T {
        rational_value(self.v)
    }

    /// Lattice spacing `1/v`, the midpoint quadrature weight per mode.
    pub fn spacing(&self) -> T {
        rational_value(self.v.recip())
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    /// Largest mode label; labels run over `-jmax..=jmax`.
    pub fn jmax(&self) -> i64 {
        self.jmax
    }

    pub fn label(&self, index: usize) -> i64 {
        index as i64 - self.jmax
    }

    pub fn index_of_label(&self, j: i64) -> Option<usize> {
        (j.abs() <= self.jmax).then(|| (j + self.jmax) as usize)
    }

    /// Index of an exact lattice momentum, if present.
    pub fn index_of_momentum(&self, k: Rational64) -> Option<usize> {
        let j = k * self.v;
        if !j.is_integer() {
            return None;
        }
        self.index_of_label(j.to_integer())
    }

    /// Momentum `j / v` for an arbitrary integer label, evaluated from the reduced fraction.
    pub fn momentum_of_label(&self, j: i64) -> T {
        rational_value(Rational64::from_integer(j) / self.v)
    }

    /// Index of the zero mode.
    pub fn zero_index(&self) -> usize {
        self.jmax as usize
    }

    pub fn momenta(&self) -> &[T] {
        &self.momenta
    }

    /// Dispersion `sqrt(k^2 + m^2)` per mode.
    pub fn eps(&self) -> &[T] {
        &self.eps
    }

    /// `[k]_v`, the left edge of the cell of width `1/v` containing `k`.
    pub fn integer_part(&self, k: T) -> T {
        integer_part(k, self.v)
    }
}

/// `[k]_v = floor(v k) / v`.
pub fn integer_part<T: Real>(k: T, v: Rational64) -> T {
    let p = lit::<T>(*v.numer() as f64);
    let q = lit::<T>(*v.denom() as f64);
    let n = (k * p / q).floor();
    let n = n.to_i64().expect("k * v fits in i64");
    rational_value(Rational64::from_integer(n) / v)
}

fn rational_value<T: Real>(r: Rational64) -> T {
    lit::<T>(*r.numer() as f64) / lit::<T>(*r.denom() as f64)
}

fn floor_scaled<T: Real>(kappa: T, v: Rational64) -> i64 {
    let x = kappa * lit::<T>(*v.numer() as f64) / lit::<T>(*v.denom() as f64);
    let nudged = x + lit::<T>(FLOOR_SLACK) * T::one().max(x.abs());
    nudged.floor().to_i64().unwrap_or(i64::MAX)
}

/// Coarse lattice contained in a fine one.
#[derive(Debug, Clone)]
pub struct NestedPair<T: Real> {
    coarse: MomentumLattice<T>,
    fine: MomentumLattice<T>,
    ratio: i64,
    injection: Vec<usize>,
}

impl<T: Real> NestedPair<T> {
    /// Requires `fine.v / coarse.v` integral, `fine.kappa >= coarse.kappa` and equal masses.
    pub fn new(coarse: MomentumLattice<T>, fine: MomentumLattice<T>) -> Result<Self> {
        let ratio = fine.v / coarse.v;
        if !ratio.is_integer() {
            return Err(Error::Parameter(format!(
                "fine v={} is not an integer multiple of coarse v={}",
                fine.v, coarse.v
            )));
        }
        if fine.jmax < coarse.jmax * ratio.to_integer() || fine.kappa < coarse.kappa {
            return Err(Error::Parameter(format!(
                "fine cutoff {} does not cover coarse cutoff {}",
                fine.kappa, coarse.kappa
            )));
        }
        if fine.mass != coarse.mass {
            return Err(Error::Parameter("nested lattices must share the mass".into()));
        }
        let r = ratio.to_integer();
        let injection = (0..coarse.len())
            .map(|i| fine.index_of_label(coarse.label(i) * r).expect("coarse mode inside fine lattice"))
            .collect();
        Ok(Self { coarse, fine, ratio: r, injection })
    }

    pub fn coarse(&self) -> &MomentumLattice<T> {
        &self.coarse
    }

    pub fn fine(&self) -> &MomentumLattice<T> {
        &self.fine
    }

    /// Refinement factor `fine.v / coarse.v`.
    pub fn ratio(&self) -> i64 {
        self.ratio
    }

    /// Fine index of each coarse mode.
    pub fn mode_injection(&self) -> &[usize] {
        &self.injection
    }

    /// Fine indices in the cell `[gamma, gamma + 1/v_coarse)` of coarse mode `i`.
    pub fn cell(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.coarse.label(i) * self.ratio;
        (base..base + self.ratio).filter_map(|j| self.fine.index_of_label(j))
    }

    /// Isometric projection from fine to coarse coefficients: normalized cell sums.
    pub fn project(&self, f: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if f.len() != self.fine.len() {
            return Err(Error::Shape { expected: self.fine.len(), got: f.len() });
        }
        Ok((0..self.coarse.len())
            .map(|i| {
                let cell: Vec<usize> = self.cell(i).collect();
                let norm = lit::<T>(cell.len() as f64).sqrt().recip();
                cell.iter().fold(Complex::zero(), |acc: Complex<T>, &k| acc + f[k]) * norm
            })
            .collect())
    }

    /// Adjoint of [`project`](Self::project): spreads each coarse value evenly over its cell.
    pub fn embed(&self, g: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if g.len() != self.coarse.len() {
            return Err(Error::Shape { expected: self.coarse.len(), got: g.len() });
        }
        let mut out = vec![Complex::zero(); self.fine.len()];
        for (i, &gi) in g.iter().enumerate() {
            let cell: Vec<usize> = self.cell(i).collect();
            let norm = lit::<T>(cell.len() as f64).sqrt().recip();
            for k in cell {
                out[k] = gi * norm;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(v: i64, kappa: f64) -> MomentumLattice<f64> {
        MomentumLattice::with_integer_v(v, kappa, 1.0).unwrap()
    }

    #[test]
    fn enumerates_modes() {
        assert_eq!(lat(1, 2.0).momenta(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(lat(2, 1.0).momenta(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let l = lat(4, 8.0);
        let count = (-100i64..=100).filter(|j| (*j as f64 / 4.0).abs() <= 8.0).count();
        assert_eq!(l.len(), count);
        assert_eq!(l.len(), 65);
    }

    #[test]
    fn rational_spacing() {
        let l = MomentumLattice::<f64>::new(Rational64::new(3, 2), 2.0, 1.0).unwrap();
        assert_eq!(l.len(), 7);
        assert_eq!(l.momenta()[6], 2.0);
        assert_eq!(l.momenta()[5], 4.0 / 3.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MomentumLattice::<f64>::with_integer_v(0, 1.0, 1.0).is_err());
        assert!(MomentumLattice::<f64>::with_integer_v(-1, 1.0, 1.0).is_err());
        assert!(MomentumLattice::<f64>::with_integer_v(1, 0.0, 1.0).is_err());
        assert!(MomentumLattice::<f64>::with_integer_v(1, 1.0, 0.0).is_err());
        assert!(MomentumLattice::<f64>::with_integer_v(1, 0.5, 1.0).is_err());
    }

    #[test]
    fn integer_part_rounds_down() {
        let v = Rational64::from_integer(2);
        assert_eq!(integer_part(0.6, v), 0.5);
        assert_eq!(integer_part(-0.1, v), -0.5);
        for &g in lat(2, 3.0).momenta() {
            assert_eq!(integer_part(g, v), g);
        }
    }

    #[test]
    fn boundary_mode_is_kept() {
        assert_eq!(lat(10, 0.3).len(), 7);
        assert_eq!(lat(100, 0.29).len(), 59);
    }

    #[test]
    fn nested_dispersion_matches_exactly() {
        let pair = NestedPair::new(lat(2, 2.0), lat(8, 4.0)).unwrap();
        for (i, &k) in pair.mode_injection().iter().enumerate() {
            assert_eq!(pair.coarse().eps()[i].to_bits(), pair.fine().eps()[k].to_bits());
        }
        assert!(NestedPair::new(lat(2, 2.0), lat(3, 4.0)).is_err());
        assert!(NestedPair::new(lat(2, 2.0), lat(4, 1.0)).is_err());
    }

    #[test]
    fn project_embed_is_identity() {
        let pair = NestedPair::new(lat(1, 2.0), lat(4, 3.0)).unwrap();
        let g: Vec<Complex<f64>> = (0..pair.coarse().len()).map(|i| Complex::new(i as f64, 1.0 - i as f64)).collect();
        let back = pair.project(&pair.embed(&g).unwrap()).unwrap();
        for (a, b) in g.iter().zip(&back) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
