//! Closed-form spectral results: perturbative dressed states, four-state block solutions and
//! the transition rates built from them.

pub mod perturbative;
pub mod quartic;
pub mod rates;
pub mod subspace;

pub use perturbative::{perturbative_energy, perturbative_state, xi_coefficients, PerturbativeState};
pub use quartic::{ferrari_roots, Quartic};
pub use rates::{analytic_rate_2exc, analytic_rate_4exc, analytic_rate_ladder, analytic_resonance_2exc};
pub use subspace::{
    bloch_siegert_shifts, m1_eigenstates, subspace_matrix, BlochSiegertShifts, BlockEntries, SubspaceSolution,
};
