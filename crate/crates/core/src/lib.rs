//! Lattice-cutoff numerics for charged P(φ)₂ Hamiltonians in a finite spatial box.
//!
//! The crate discretizes the one-particle operators of a complex scalar field
//! coupled to an external potential, builds truncated two-species Fock spaces
//! over momentum lattices, assembles Wick-ordered cutoff Hamiltonians, and
//! runs spectral and convergence experiments on them.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the usual double-precision choice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
pub mod oneparticle;
pub mod quantization;
pub mod linalg;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type MomentumLattice64 = lattice::MomentumLattice<f64>;
pub type MomentumLattice32 = lattice::MomentumLattice<f32>;
pub type NestedPair64 = lattice::NestedPair<f64>;
pub type CsrMatrix64 = sparse::CsrMatrix<f64>;
pub type FockOperator64 = fock::FockOperator<f64>;
pub type InteractionSpec64 = hamiltonian::InteractionSpec<f64>;
pub type HamiltonianBundle64 = hamiltonian::HamiltonianBundle<f64>;
pub type Potential64 = oneparticle::Potential<f64>;
pub type PhaseSpaceGrid64 = quantization::PhaseSpaceGrid<f64>;
pub type SpectralOptions64 = spectral::SpectralOptions<f64>;
pub type FockOperator32 = fock::FockOperator<f32>;
pub type HamiltonianBundle32 = hamiltonian::HamiltonianBundle<f32>;
