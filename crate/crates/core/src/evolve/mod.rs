//! Time evolution, fidelity curves and hopping-rate optimisation.
//!
//! Three interchangeable engines compute the same fidelity
//! `F(t) = |⟨w|e^{-iHt}|s_k⟩|²`:
//!
//! * `reduced`: the (k+1)-dimensional class-frame Hamiltonian (all-to-all only);
//! * `sparse`: the full k-excitation sector, diagonalised densely up to
//!   [`DENSE_LIMIT`] states and propagated by Krylov steps above that;
//! * `brute-force`: the `2^n` Pauli construction restricted to weight k,
//!   used as a reference.

mod brute;
mod propagate;
mod search;

pub use brute::{
    brute_force_engine, BruteForceSector, FullSpaceHamiltonian, MAX_BRUTE_FORCE_SPINS,
};
pub use propagate::{propagate, propagate_with, KrylovOptions, Method, DENSE_LIMIT};
pub use search::{
    auto_gamma_range, fidelity_series, max_fidelity, max_fidelity_at, optimize_gamma,
    uniform_state, Coupling, Engine, FidelityMaximum, FidelityModel, FidelitySeries, GammaSpec,
    SearchConfig, SeriesMeta, DEFAULT_GRID_POINTS, GAMMA_SCAN_POINTS,
};
