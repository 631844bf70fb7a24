//! Truncated two-species bosonic Fock space over lattice modes.
//!
//! A basis state is a multiset of occupied slots; slot `s * M + i` is mode
//! `i` of species `s` (species-major). States are ordered by total particle
//! number, then by ascending lexicographic order of occupation vectors.
//! Every operator is the compression `P W P` of its untruncated counterpart
//! to `N <= n_max`, so creators annihilate the top sector.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::MomentumLattice;
use crate::linalg::{operator_norm, operator_norm_dense, LanczosOptions};
use crate::scalar::{abs2, cabs, czero, lit, Complex, Real};
use crate::sparse::CsrMatrix;

/// Default ceiling on basis dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    One,
    Two,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::One, Species::Two];

    pub fn index(self) -> usize {
        match self {
            Species::One => 0,
            Species::Two => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    /// `compositions[k][t]`: number of `k`-slot occupation vectors summing to `t`.
    compositions: Vec<Vec<usize>>,
    sector_offsets: Vec<usize>,
    /// Sorted occupied slots per state, stride `n_max`.
    slots: Vec<u16>,
    lens: Vec<u8>,
}

fn checked_dimension(slots: usize, n_max: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut c: usize = 1; // C(slots + n - 1, n)
    for n in 0..=n_max {
        if n > 0 {
            c = c.checked_mul(slots + n - 1)?.checked_div(n)?;
        }
        total = total.checked_add(c)?;
    }
    Some(total)
}

impl FockBasis {
    /// Basis over `modes` modes per species with at most `n_max` particles.
    pub fn new(modes: usize, n_max: usize, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Parameter("Fock space needs at least one mode".into()));
        }
        let s = 2 * modes;
        if s > u16::MAX as usize || n_max > u8::MAX as usize {
            return Err(Error::Resource { dimension: usize::MAX, cap });
        }
        let dim = checked_dimension(s, n_max).unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::Resource { dimension: dim, cap });
        }
        let mut compositions = vec![vec![0usize; n_max + 1]; s + 1];
        compositions[0][0] = 1;
        for k in 1..=s {
            for t in 0..=n_max {
                compositions[k][t] = (0..=t).map(|v| compositions[k - 1][t - v]).sum();
            }
        }
        let mut sector_offsets = Vec::with_capacity(n_max + 2);
        let mut acc = 0;
        for &count in &compositions[s][..=n_max] {
            sector_offsets.push(acc);
            acc += count;
        }
        sector_offsets.push(acc);
        let stride = n_max.max(1);
        let mut basis = Self {
            modes,
            n_max,
            compositions,
            sector_offsets,
            slots: vec![0; dim * stride],
            lens: vec![0; dim],
        };
        let mut current: Vec<u16> = Vec::with_capacity(n_max);
        for n in 0..=n_max {
            basis.fill_sector(&mut current, n, 0);
        }
        Ok(basis)
    }

    fn fill_sector(&mut self, current: &mut Vec<u16>, n: usize, start: usize) {
        if current.len() == n {
            let idx = self.index_of_sorted(current).expect("enumerated state ranks");
            let stride = self.n_max.max(1);
            self.slots[idx * stride..idx * stride + n].copy_from_slice(current);
            self.lens[idx] = n as u8;
            return;
        }
        for s in start..2 * self.modes {
            current.push(s as u16);
            self.fill_sector(current, n, s);
            current.pop();
        }
    }

    pub fn dim(&self) -> usize {
        self.lens.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn slot_count(&self) -> usize {
        2 * self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn slot(&self, species: Species, mode: usize) -> usize {
        species.index() * self.modes + mode
    }

    /// Sorted occupied slots of state `i`.
    pub fn state_slots(&self, i: usize) -> &[u16] {
        let stride = self.n_max.max(1);
        &self.slots[i * stride..i * stride + self.lens[i] as usize]
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.lens[i] as usize
    }

    pub fn occupations(&self, i: usize) -> Vec<u8> {
        let mut occ = vec![0u8; self.slot_count()];
        for &s in self.state_slots(i) {
            occ[s as usize] += 1;
        }
        occ
    }

    /// First index of the `n`-particle sector.
    pub fn sector_offset(&self, n: usize) -> usize {
        self.sector_offsets[n.min(self.n_max + 1)]
    }

    /// Index of a state given by its sorted occupied slots.
    pub fn index_of_sorted(&self, slots: &[u16]) -> Option<usize> {
        let n = slots.len();
        if n > self.n_max {
            return None;
        }
        let s_total = self.slot_count();
        let mut rank = 0;
        let mut remaining = n;
        let mut k = 0;
        while k < n {
            let s = slots[k] as usize;
            if s >= s_total {
                return None;
            }
            let mut c = 1;
            while k + c < n && slots[k + c] as usize == s {
                c += 1;
            }
            let tail = &self.compositions[s_total - s - 1];
            for v in 0..c {
                rank += tail[remaining - v];
            }
            remaining -= c;
            k += c;
        }
        Some(self.sector_offsets[n] + rank)
    }

    /// Index of a state given by its occupation vector.
    pub fn index_of(&self, occupations: &[u8]) -> Option<usize> {
        if occupations.len() != self.slot_count() {
            return None;
        }
        let mut slots = Vec::new();
        for (s, &c) in occupations.iter().enumerate() {
            slots.extend(std::iter::repeat_n(s as u16, c as usize));
        }
        self.index_of_sorted(&slots)
    }

    fn index_of_occupancy(&self, occ: &[u8], n: usize) -> Option<usize> {
        if n > self.n_max {
            return None;
        }
        let s_total = self.slot_count();
        let mut rank = 0;
        let mut remaining = n;
        for (s, &c) in occ.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let c = c as usize;
            if c > 0 {
                let tail = &self.compositions[s_total - s - 1];
                for v in 0..c {
                    rank += tail[remaining - v];
                }
                remaining -= c;
            }
        }
        Some(self.sector_offsets[n] + rank)
    }

    /// Basis indices of `coarse` states inside `self`, with coarse mode `i` sent to `injection[i]`.
    pub fn embedding_indices(&self, coarse: &FockBasis, injection: &[usize]) -> Result<Vec<usize>> {
        if injection.len() != coarse.modes || coarse.n_max != self.n_max {
            return Err(Error::Parameter("Fock bases are not nested".into()));
        }
        if injection.iter().any(|&k| k >= self.modes) {
            return Err(Error::Parameter("mode injection leaves the fine lattice".into()));
        }
        (0..coarse.dim())
            .map(|i| {
                let mut mapped: Vec<u16> = coarse
                    .state_slots(i)
                    .iter()
                    .map(|&s| {
                        let s = s as usize;
                        let (sp, mode) = (s / coarse.modes, s % coarse.modes);
                        (sp * self.modes + injection[mode]) as u16
                    })
                    .collect();
                mapped.sort_unstable();
                self.index_of_sorted(&mapped).ok_or_else(|| Error::Parameter("state outside fine basis".into()))
            })
            .collect()
    }
}

/// Builds the basis over the modes of `lattice`.
pub fn enumerate_basis<T: Real>(lattice: &MomentumLattice<T>, n_max: usize, cap: usize) -> Result<FockBasis> {
    FockBasis::new(lattice.len(), n_max, cap)
}

/// Sparse operator on a [`FockBasis`], with an explicit Hermiticity claim.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator<T: Real> {
    pub matrix: CsrMatrix<T>,
    pub hermitian: bool,
}

impl<T: Real> FockOperator<T> {
    pub fn new(matrix: CsrMatrix<T>, hermitian: bool) -> Self {
        Self { matrix, hermitian }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matrix.mul_vec(x)
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    /// Confirms the Hermiticity claim exactly (entrywise conjugate symmetry).
    pub fn verify_hermitian(&self) -> Result<()> {
        if self.hermitian && self.matrix.hermitian_defect() != T::zero() {
            return Err(Error::Contract(format!(
                "operator flagged Hermitian has defect {}",
                self.matrix.hermitian_defect()
            )));
        }
        Ok(())
    }

    /// Exact Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = lit::<T>(0.5);
        Self { matrix: self.matrix.add(&self.matrix.adjoint()).scale_real(half), hermitian: true }
    }
}

fn sqrt_usize<T: Real>(n: usize) -> T {
    lit::<T>(n as f64).sqrt()
}

/// `a*` on a single slot.
pub fn creation<T: Real>(basis: &FockBasis, species: Species, mode: usize) -> Result<FockOperator<T>> {
    if mode >= basis.modes {
        return Err(Error::Parameter(format!("mode {mode} outside lattice of {} modes", basis.modes)));
    }
    let mut f = vec![czero::<T>(); basis.modes];
    f[mode] = Complex::new(T::one(), T::zero());
    Ok(smeared_creation(basis, species, &f))
}

/// `a` on a single slot.
pub fn annihilation<T: Real>(basis: &FockBasis, species: Species, mode: usize) -> Result<FockOperator<T>> {
    Ok(creation(basis, species, mode)?.adjoint())
}

/// `a*(f) = Σ_γ f_γ a*(γ)` for one species.
pub fn smeared_creation<T: Real>(basis: &FockBasis, species: Species, f: &[Complex<T>]) -> FockOperator<T> {
    let m = basis.modes;
    let cols: Vec<Vec<(usize, usize, Complex<T>)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let mut out = Vec::new();
            if basis.particle_number(col) >= basis.n_max {
                return out;
            }
            let mut occ = basis.occupations(col);
            let n = basis.particle_number(col);
            for (mode, &fm) in f.iter().enumerate().take(m) {
                if fm == czero() {
                    continue;
                }
                let s = species.index() * m + mode;
                occ[s] += 1;
                let row = basis.index_of_occupancy(&occ, n + 1).expect("state inside basis");
                out.push((row, col, fm * sqrt_usize::<T>(occ[s] as usize)));
                occ[s] -= 1;
            }
            out
        })
        .collect();
    FockOperator::new(CsrMatrix::from_triplets(basis.dim(), basis.dim(), cols.concat()), false)
}

/// `a(f) = Σ_γ conj(f_γ) a(γ)`, the adjoint of `a*(f)`.
pub fn smeared_annihilation<T: Real>(basis: &FockBasis, species: Species, f: &[Complex<T>]) -> FockOperator<T> {
    smeared_creation(basis, species, f).adjoint()
}

/// Segal field `φ(f) = (a*(f) + a(f)) / √2`.
pub fn field_operator<T: Real>(basis: &FockBasis, species: Species, f: &[Complex<T>]) -> Result<FockOperator<T>> {
    if f.len() != basis.modes {
        return Err(Error::Shape { expected: basis.modes, got: f.len() });
    }
    let c = smeared_creation(basis, species, f).matrix;
    let sum = c.add(&c.adjoint()).scale_real(T::one() / lit::<T>(2.0).sqrt());
    Ok(FockOperator::new(sum, true))
}

/// Total number operator `N`.
pub fn number_operator<T: Real>(basis: &FockBasis) -> FockOperator<T> {
    let d: Vec<T> = (0..basis.dim()).map(|i| lit(basis.particle_number(i) as f64)).collect();
    FockOperator::new(CsrMatrix::from_diagonal(&d), true)
}

/// `dΓ` of a diagonal one-particle operator given per slot.
pub fn dgamma_diagonal<T: Real>(basis: &FockBasis, weights: &[T]) -> Result<FockOperator<T>> {
    if weights.len() != basis.slot_count() {
        return Err(Error::Shape { expected: basis.slot_count(), got: weights.len() });
    }
    let d: Vec<T> = (0..basis.dim())
        .map(|i| basis.state_slots(i).iter().fold(T::zero(), |acc, &s| acc + weights[s as usize]))
        .collect();
    Ok(FockOperator::new(CsrMatrix::from_diagonal(&d), true))
}

/// `dΓ(h) = Σ h_{st} a*_s a_t` for a Hermitian `2M x 2M` matrix `h` (species-major).
///
/// `h` is replaced by its exact Hermitian part before assembly, so the
/// result is conjugate-symmetric entry by entry.
pub fn dgamma<T: Real>(basis: &FockBasis, h: &DMatrix<Complex<T>>) -> Result<FockOperator<T>> {
    let s_total = basis.slot_count();
    if h.nrows() != s_total || h.ncols() != s_total {
        return Err(Error::Shape { expected: s_total, got: h.nrows() });
    }
    let scale = h.iter().fold(T::one(), |m, z| m.max(cabs(*z)));
    let defect = (h - h.adjoint()).iter().fold(T::zero(), |m, z| m.max(cabs(*z)));
    if defect > lit::<T>(1e-12) * scale {
        return Err(Error::Contract(format!("dGamma argument is not Hermitian (defect {defect})")));
    }
    let half = lit::<T>(0.5);
    let h = (h + h.adjoint()).map(|z| z * half);
    let cols: Vec<Vec<(usize, usize, Complex<T>)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let n = basis.particle_number(col);
            let mut occ = basis.occupations(col);
            let mut out = Vec::new();
            let mut diag = czero::<T>();
            for t in 0..s_total {
                let nt = occ[t] as usize;
                if nt == 0 {
                    continue;
                }
                diag += h[(t, t)] * lit::<T>(nt as f64);
                occ[t] -= 1;
                for s in 0..s_total {
                    if s == t || h[(s, t)] == czero() {
                        continue;
                    }
                    occ[s] += 1;
                    let row = basis.index_of_occupancy(&occ, n).expect("state inside basis");
                    let f = sqrt_usize::<T>(nt * occ[s] as usize);
                    out.push((row, col, h[(s, t)] * f));
                    occ[s] -= 1;
                }
                occ[t] += 1;
            }
            out.push((col, col, diag));
            out
        })
        .collect();
    Ok(FockOperator::new(CsrMatrix::from_triplets(basis.dim(), basis.dim(), cols.concat()), true))
}

/// `dΓ(h ⊕ h)` for an `M x M` matrix acting identically on both species.
pub fn dgamma_both_species<T: Real>(basis: &FockBasis, h: &DMatrix<Complex<T>>) -> Result<FockOperator<T>> {
    let m = basis.modes;
    if h.nrows() != m || h.ncols() != m {
        return Err(Error::Shape { expected: m, got: h.nrows() });
    }
    let full = DMatrix::from_fn(2 * m, 2 * m, |r, c| if r / m == c / m { h[(r % m, c % m)] } else { czero() });
    dgamma(basis, &full)
}

/// Coefficient tensor of a Wick monomial `Σ w(k, k') a*(k₁)…a*(k_p) a(k'₁)…a(k'_q)`.
///
/// Entries are stored row-major over `modes^(p+q)` with creator indices
/// first, then annihilator indices, in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct WickKernel<T: Real> {
    pub p: usize,
    pub q: usize,
    /// Species of every slot: `p` creators followed by `q` annihilators.
    pub species: Vec<Species>,
    pub modes: usize,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> WickKernel<T> {
    pub fn zeros(p: usize, q: usize, species: Vec<Species>, modes: usize) -> Result<Self> {
        if species.len() != p + q {
            return Err(Error::Shape { expected: p + q, got: species.len() });
        }
        let len = modes.checked_pow((p + q) as u32).ok_or(Error::Resource { dimension: usize::MAX, cap: usize::MAX })?;
        Ok(Self { p, q, species, modes, coeffs: vec![czero(); len] })
    }

    /// Scalar kernel `c` (the multiple `c·1`).
    pub fn constant(c: Complex<T>, modes: usize) -> Self {
        Self { p: 0, q: 0, species: Vec::new(), modes, coeffs: vec![c] }
    }

    pub fn order(&self) -> usize {
        self.p + self.q
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.modes + k)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for slot in (0..self.order()).rev() {
            idx[slot] = flat % self.modes;
            flat /= self.modes;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Complex<T> {
        self.coeffs[self.flat_index(idx)]
    }

    /// `w†(k', k) = conj w(k, k')`: creators and annihilators swap roles.
    pub fn adjoint(&self) -> Self {
        let species: Vec<Species> = self.species[self.p..].iter().chain(&self.species[..self.p]).copied().collect();
        let mut out = Self { p: self.q, q: self.p, species, modes: self.modes, coeffs: vec![czero(); self.coeffs.len()] };
        for flat in 0..self.coeffs.len() {
            let idx = self.multi_index(flat);
            let swapped: Vec<usize> = idx[self.p..].iter().chain(&idx[..self.p]).copied().collect();
            let target = out.flat_index(&swapped);
            out.coeffs[target] = self.coeffs[flat].conj();
        }
        out
    }

    /// Averages over permutations of creator slots with equal species, and likewise for annihilators.
    pub fn symmetrize(&self) -> Self {
        let perms_c = species_preserving_permutations(&self.species[..self.p]);
        let perms_a = species_preserving_permutations(&self.species[self.p..]);
        let count = lit::<T>((perms_c.len() * perms_a.len()) as f64);
        let mut out = self.clone();
        for flat in 0..self.coeffs.len() {
            let idx = self.multi_index(flat);
            let mut acc = czero::<T>();
            for pc in &perms_c {
                for pa in &perms_a {
                    let permuted: Vec<usize> = pc
                        .iter()
                        .map(|&i| idx[i])
                        .chain(pa.iter().map(|&i| idx[self.p + i]))
                        .collect();
                    acc += self.coeffs[self.flat_index(&permuted)];
                }
            }
            out.coeffs[flat] = acc / count;
        }
        out
    }

    /// Largest deviation from the slot-permutation symmetry.
    pub fn symmetry_defect(&self) -> T {
        let s = self.symmetrize();
        s.coeffs.iter().zip(&self.coeffs).fold(T::zero(), |m, (a, b)| m.max(cabs(a - b)))
    }
}

fn species_preserving_permutations(species: &[Species]) -> Vec<Vec<usize>> {
    let n = species.len();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(species: &[Species], current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let pos = current.len();
        if pos == species.len() {
            out.push(current.clone());
            return;
        }
        for i in 0..species.len() {
            if !used[i] && species[i] == species[pos] {
                used[i] = true;
                current.push(i);
                rec(species, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(species, &mut current, &mut used, &mut out);
    out
}

struct Contribution<T: Real> {
    row: usize,
    key: Vec<u32>,
    value: Complex<T>,
}

/// `Wick(w)` compressed to the basis.
///
/// Each matrix entry sums its contributing mode tuples in an order that is
/// invariant under taking adjoints, so `wick_operator(w.adjoint())` equals
/// `wick_operator(w).adjoint()` bit for bit.
pub fn wick_operator<T: Real>(basis: &FockBasis, kern: &WickKernel<T>) -> Result<FockOperator<T>> {
    if kern.modes != basis.modes {
        return Err(Error::Shape { expected: basis.modes, got: kern.modes });
    }
    let dim = basis.dim();
    if kern.order() == 0 {
        let c = kern.coeffs[0];
        let trip = (0..dim).map(|i| (i, i, c)).collect();
        return Ok(FockOperator::new(CsrMatrix::from_triplets(dim, dim, trip), c.im == T::zero()));
    }
    let cols: Vec<Vec<(usize, usize, Complex<T>)>> =
        (0..dim).into_par_iter().map(|col| wick_column(basis, kern, col)).collect();
    Ok(FockOperator::new(CsrMatrix::from_triplets(dim, dim, cols.concat()), false))
}

fn wick_column<T: Real>(basis: &FockBasis, kern: &WickKernel<T>, col: usize) -> Vec<(usize, usize, Complex<T>)> {
    let n = basis.particle_number(col);
    if kern.q > n || n - kern.q + kern.p > basis.n_max {
        return Vec::new();
    }
    let mut occ = basis.occupations(col);
    let mut tuple = vec![0usize; kern.order()];
    let mut contribs: Vec<Contribution<T>> = Vec::new();
    annihilate_rec(basis, kern, col, 0, 1, &mut occ, &mut tuple, &mut contribs);

    contribs.sort_by(|a, b| (a.row, &a.key).cmp(&(b.row, &b.key)));
    let mut out = Vec::new();
    let mut k = 0;
    while k < contribs.len() {
        let row = contribs[k].row;
        let mut entry = czero::<T>();
        while k < contribs.len() && contribs[k].row == row {
            let mut group = contribs[k].value;
            let mut g = k + 1;
            while g < contribs.len() && contribs[g].row == row && contribs[g].key == contribs[k].key {
                group += contribs[g].value;
                g += 1;
            }
            entry += group;
            k = g;
        }
        out.push((row, col, entry));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn annihilate_rec<T: Real>(
    basis: &FockBasis,
    kern: &WickKernel<T>,
    col: usize,
    depth: usize,
    falling: u64,
    occ: &mut [u8],
    tuple: &mut [usize],
    out: &mut Vec<Contribution<T>>,
) {
    if depth == kern.q {
        create_rec(basis, kern, col, 0, falling, 1, occ, tuple, out);
        return;
    }
    let sp = kern.species[kern.p + depth].index();
    for mode in 0..basis.modes {
        let s = sp * basis.modes + mode;
        let c = occ[s];
        if c == 0 {
            continue;
        }
        occ[s] -= 1;
        tuple[kern.p + depth] = mode;
        annihilate_rec(basis, kern, col, depth + 1, falling * c as u64, occ, tuple, out);
        occ[s] += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn create_rec<T: Real>(
    basis: &FockBasis,
    kern: &WickKernel<T>,
    col: usize,
    depth: usize,
    falling_col: u64,
    falling_row: u64,
    occ: &mut [u8],
    tuple: &mut [usize],
    out: &mut Vec<Contribution<T>>,
) {
    if depth == kern.p {
        let w = kern.get(tuple);
        if w == czero() {
            return;
        }
        let n_row = basis.particle_number(col) + kern.p - kern.q;
        let row = basis.index_of_occupancy(occ, n_row).expect("state inside basis");
        let creators: Vec<u32> = tuple[..kern.p].iter().map(|&k| k as u32).collect();
        let annihilators: Vec<u32> = tuple[kern.p..].iter().map(|&k| k as u32).collect();
        // tuple attached to the lower-indexed state first; order-free on the diagonal
        let key = if row < col {
            [creators, annihilators].concat()
        } else if row > col {
            [annihilators, creators].concat()
        } else {
            let a = [creators.clone(), annihilators.clone()].concat();
            let b = [annihilators, creators].concat();
            a.min(b)
        };
        let factor = lit::<T>((falling_col * falling_row) as f64).sqrt();
        out.push(Contribution { row, key, value: w * factor });
        return;
    }
    let sp = kern.species[depth].index();
    for mode in 0..basis.modes {
        let s = sp * basis.modes + mode;
        occ[s] += 1;
        tuple[depth] = mode;
        create_rec(basis, kern, col, depth + 1, falling_col, falling_row * occ[s] as u64, occ, tuple, out);
        occ[s] -= 1;
    }
}

/// Norms in `‖a(f)(dΓ(b ⊕ b) + 1)^{-1/2}‖ <= ‖b^{-1/2} f‖` for species one.
///
/// Returns `(lhs, rhs)`; `b` is a positive multiplier over modes.
pub fn ntau_check<T: Real>(basis: &FockBasis, f: &[Complex<T>], b: &[T]) -> Result<(T, T)> {
    let m = basis.modes;
    if f.len() != m || b.len() != m {
        return Err(Error::Shape { expected: m, got: f.len().min(b.len()) });
    }
    if b.iter().any(|x| !(*x > T::zero())) {
        return Err(Error::Parameter("multiplier b must be positive".into()));
    }
    let rhs = f.iter().zip(b).fold(T::zero(), |s, (z, w)| s + abs2(*z) / *w).sqrt();
    if rhs == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let weights: Vec<T> = b.iter().chain(b).copied().collect();
    let db = dgamma_diagonal(basis, &weights)?;
    let inv_sqrt: Vec<T> = db.matrix.diagonal_real().iter().map(|d| (*d + T::one()).sqrt().recip()).collect();
    let d = CsrMatrix::from_diagonal(&inv_sqrt);
    let op = smeared_annihilation(basis, Species::One, f).matrix.matmul(&d);
    let lhs = if basis.dim() <= 1500 {
        operator_norm_dense(&op.to_dense())
    } else {
        let adj = op.adjoint();
        operator_norm(|x| op.mul_vec(x), |x| adj.mul_vec(x), basis.dim(), &LanczosOptions::default())?
    };
    Ok((lhs, rhs))
}
