//! Continuous-time quantum-walk spatial search for a binary string with k
//! ones, carried out in the k-excitation subspace of n spins.
//!
//! The crate builds the search Hamiltonian `γ H_walk + H_mark` on the
//! `C(n,k)`-dimensional sector, its exact `(k+1)`-dimensional reduction for
//! all-to-all couplings and the large-n limit `R_k`, evolves the uniform
//! superposition and reports the probability of the marked string.

pub mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod io;
pub mod linesearch;
pub mod protocols;
pub mod reduced;
pub mod spectral;
pub mod subspace;

pub use error::{Error, Result};
pub use evolve::{
    fidelity_series, max_fidelity, optimize_gamma, propagate, uniform_state, Coupling, Engine,
    FidelityMaximum, FidelitySeries, GammaSpec, SearchConfig,
};
pub use hamiltonian::{
    build_mark, build_search, build_walk, long_range_couplings, CouplingMatrix, SparseHamiltonian,
};
pub use linesearch::PeakRule;
pub use protocols::{
    coverage_tail, expected_trials, min_repeats_r, min_trials_s, protocol_times, ProtocolComparison,
};
pub use reduced::{
    asymptotic_fidelity, asymptotic_table, build_reduced, build_rk, max_asymptotic,
    AsymptoticMaximum, ReducedHamiltonian,
};
pub use subspace::{enumerate_basis, BasisState, SubspaceBasis};
