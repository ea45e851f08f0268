//! Simulation and analysis toolkit for quantum annealing of the dissipative
//! transverse-field Ising chain.
//!
//! The chain is annealed under H(s) = A(s) H_TF + B(s) H_I while every spin
//! couples to an independent Ohmic bath. The reduced dynamics is evaluated as
//! a discrete-time path integral on a folded two-branch time grid: the bath
//! enters through an influence functional with a finite memory window, which
//! is compressed into a matrix-product state and contracted against the bare
//! propagator network by a boundary fixed point directly in the thermodynamic
//! limit. A scaling layer extracts freezing points, effective temperatures
//! and excess-energy exponents from the resulting trajectories.

pub mod bath;
pub mod boundary;
pub mod column;
pub mod error;
pub mod grid;
pub mod influence;
pub mod kernel;
pub mod mps;
pub mod oracles;
pub mod quad;
pub mod rdm;
pub mod schedule;
pub mod theory;
pub mod trotter;

pub use bath::BathSpec;
pub use boundary::{
    itebd_fixed_point, itebd_fixed_point_from, itebd_fixed_point_seeded, measure_all,
    measure_local, Absorption, BoundaryMps, BulkMeasurement, FixedPoint, Observable, Side,
};
pub use error::{CoreError, Result};
pub use grid::{CompositeIndex, TimeGrid, COMP_DIM, SBR, SIG};
pub use column::{build_column, build_column_sampled, Cap, ColumnTensor};
pub use influence::{
    build_influence_exact, compress_influence, reconstruction_error, InfluenceBuilder,
    InfluenceMps,
};
pub use kernel::KernelTable;
pub use mps::{spectra_distance, Mps};
pub use oracles::{
    classical_chain_energy, dephasing_coherence, ed_bulk_rdm, ed_ground_energy,
    ed_trotter_evolve, ed_trotter_evolve_sampled, path_sum_rdm, tfic_degeneracy_warning,
    tfic_equilibrium_energy, Drive, EdSample, SpinBosonPathSum,
};
pub use rdm::{extract_rdm, ReducedDensityMatrix};
pub use schedule::{AnnealingSchedule, ScheduleSampling};
pub use theory::{
    effective_temperature, excess_energy, find_t_star, fit_power_law, freezing_point,
    frozen_energy_line, gibbs_window_distribution, kl_divergence, predicted_exponent,
    Freezing, FreezingModel, KlCurve, KlValue, ScalingFit,
};
pub use trotter::Branch;

/// Works around hypervisors that mask CPUID feature flags: the BLAS backend
/// then falls back to unvectorized kernels even though wide SIMD works fine.
/// Sets the backend's core-type override when the environment has not chosen
/// one and the CPU demonstrably supports the faster kernels. Call once at
/// process start, before any linear algebra.
pub fn tune_blas_kernel() {
    #[cfg(target_arch = "x86_64")]
    {
        if std::env::var_os("OPENBLAS_CORETYPE").is_none() {
            if is_x86_feature_detected!("avx512f") {
                std::env::set_var("OPENBLAS_CORETYPE", "SKYLAKEX");
            } else if is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
                std::env::set_var("OPENBLAS_CORETYPE", "HASWELL");
            }
        }
    }
}
