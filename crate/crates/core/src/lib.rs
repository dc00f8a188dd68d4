//! Genuine multipartite correlations (GMC) in the ground state of the
//! Lipkin-Meshkov-Glick model.
//!
//! The crate is organised bottom-up:
//!
//! * [`symmetric_subspace`] builds the collective-spin Hamiltonian in the
//!   Dicke basis and finds its ground state block by block
//!   ([`tridiagonal`] holds the eigensolver).
//! * [`reduced_density`] turns a permutation-symmetric pure state into the
//!   reduced density matrix of any k-spin block.
//! * [`gmc_measures`] evaluates von Neumann entropies and the
//!   correlation hierarchy `S^{k->N}`, `S^k`.
//! * [`criticality_scan`] sweeps the transverse field, locates derivative
//!   minima and fits finite-size-scaling power laws.
//! * [`oracle`] is an independent full 2^N reference used for validation.

pub mod criticality_scan;
pub mod error;
pub mod gmc_measures;
pub mod oracle;
pub mod reduced_density;
pub mod symmetric_subspace;
pub mod tridiagonal;

pub use error::{Error, Result};
pub use gmc_measures::{gmc_spectrum, BlockEntropies, GmcSpectrum};
pub use reduced_density::{log_binomial, reduce, ReducedDensity};
pub use symmetric_subspace::{
    build_hamiltonian, ground_state, BandedHamiltonian, DickeVector, GroundState, ModelParams,
    Parity,
};
