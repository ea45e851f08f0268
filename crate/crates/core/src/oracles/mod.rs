//! Independent reference implementations used to validate conventions and
//! approximations: a brute-force single-spin path sum, Trotterized
//! exact-diagonalization for small chains, the analytic pure-dephasing
//! factor, free-fermion equilibrium thermodynamics, and the classical Ising
//! chain.

mod dephasing;
mod ed;
mod equilibrium;
mod path_sum;

pub use dephasing::dephasing_coherence;
pub use ed::{ed_bulk_rdm, ed_ground_energy, ed_trotter_evolve, ed_trotter_evolve_sampled, EdSample};
pub use equilibrium::{classical_chain_energy, tfic_degeneracy_warning, tfic_equilibrium_energy};
pub use path_sum::{path_sum_rdm, Drive, SpinBosonPathSum};
