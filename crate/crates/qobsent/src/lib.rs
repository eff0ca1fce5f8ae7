//! Observational entropy for closed quantum lattice systems.
//!
//! This crate simulates spinless fermions on a one-dimensional chain with
//! hard walls and computes observational entropies: Shannon entropies of the
//! outcome distributions of ordered sequences of coarse-grained projective
//! measurements, weighted by macrostate volumes. It provides
//!
//! - [`fock`]: fixed-particle-number occupation bases with bit encoding,
//!   occupation-bin signatures, state embedding between lattices, and
//!   partial traces;
//! - [`model`]: the NN + NNN hopping/interaction chain Hamiltonian and its
//!   decomposition into local block Hamiltonians plus a boundary interaction;
//! - [`spectral`]: dense Hermitian eigendecomposition, degeneracy grouping,
//!   and exact spectral time evolution;
//! - [`coarsegrain`]: complete orthogonal projector families (positional,
//!   energy, factorized local-energy, state-induced) in implicit
//!   representations;
//! - [`entropy`]: the chained-projector observational entropy engine plus
//!   reference entropies (von Neumann, entanglement, density of states,
//!   canonical) and consistency checks;
//! - [`scenarios`]: state factories (thermal pure, random superposition,
//!   microcanonical) and the quench / equilibrium-sweep experiments;
//! - [`bruteforce`]: a slow reference implementation that materializes every
//!   projector densely, used to validate the engine.
//!
//! Entropies are reported in nats. All Hilbert spaces are finite; dense
//! linear algebra is used throughout.

pub mod bruteforce;
pub mod coarsegrain;
pub mod entropy;
pub mod fock;
pub mod model;
pub mod scenarios;
pub mod spectral;
pub mod state;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported partition: {0}")]
    UnsupportedPartition(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("invalid coarse-graining: {0}")]
    InvalidCoarseGraining(String),
    #[error("coarse-grainings cannot be compared exactly: {0}")]
    UnsupportedComparison(String),
    #[error("state is not supported here: {0}")]
    UnsupportedState(String),
    #[error("energy {0} is outside the supported window")]
    OutOfSupport(f64),
    #[error("target energy {0} is outside the achievable mean-energy range")]
    TargetOutOfRange(f64),
    #[error("numerical consistency violation: {0}")]
    NumericalConsistency(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
