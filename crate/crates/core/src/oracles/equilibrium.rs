//! Equilibrium energies of the closed chain: free-fermion thermodynamics of
//! the transverse-field Ising chain and the classical Ising-chain limit.

use crate::error::{CoreError, Result};
use crate::quad::integrate;
use std::f64::consts::PI;

/// Per-spin thermal energy -(1/4pi) int_{-pi}^{pi} e_k tanh(e_k / 2T) dk with
/// e_k = 2 sqrt(A^2 + B^2 - 2AB cos k). T = 0 takes the ground-state limit.
pub fn tfic_equilibrium_energy(a: f64, b: f64, t: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(CoreError::Domain(format!(
            "field amplitudes must be >= 0, got A = {a}, B = {b}"
        )));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(CoreError::Domain(format!("temperature must be >= 0, got {t}")));
    }
    if a == 0.0 && b == 0.0 {
        return Ok(0.0);
    }
    // e_k has a |k| kink at k = 0 when A = B; keep 0 a panel edge and use
    // the even symmetry of the integrand
    let value = integrate(0.0, PI, PI / 16.0, 24, |k| {
        let e = 2.0 * (a * a + b * b - 2.0 * a * b * k.cos()).max(0.0).sqrt();
        let occ = if t == 0.0 { 1.0 } else { (e / (2.0 * t)).tanh() };
        e * occ
    });
    Ok(-value / (2.0 * PI))
}

/// Both amplitudes zero makes every state degenerate; the zero energy
/// returned by the quadrature is exact but carries no thermal content.
pub fn tfic_degeneracy_warning(a: f64, b: f64) -> Option<String> {
    (a == 0.0 && b == 0.0)
        .then(|| "A = B = 0: Hamiltonian is zero, energy 0 by degeneracy".to_string())
}

/// Per-bond energy -B tanh(B/T) of the classical Ising chain in equilibrium.
pub fn classical_chain_energy(b: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(CoreError::Domain(format!(
            "classical chain needs T > 0, got {t}"
        )));
    }
    if !b.is_finite() {
        return Err(CoreError::Domain(format!("bond strength must be finite, got {b}")));
    }
    Ok(-b * (b / t).tanh())
}
