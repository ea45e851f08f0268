//! Analytic coherence decay of a single spin coupled to the bath through
//! sigma^z only. This closed form pins the branch-sign convention of the
//! discrete path integral.

use crate::bath::BathSpec;
use crate::error::{CoreError, Result};
use crate::quad::integrate;

/// exp[-4 int_0^inf J(w) coth(w/2T) (1 - cos wt) / w^2 dw]: the factor by
/// which the off-diagonal element of the spin state has decayed at time t.
/// The prefactor 4 reflects coupling eigenvalues +-1.
pub fn dephasing_coherence(t: f64, bath: &BathSpec) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(CoreError::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 || bath.eta == 0.0 {
        return Ok(1.0);
    }
    Ok((-4.0 * decay_exponent(t, bath)).exp())
}

fn decay_exponent(t: f64, bath: &BathSpec) -> f64 {
    integrate(0.0, bath.cap(), bath.panel_width(t), 24, |w| {
        let j = bath.eta * 0.5 * w * (-w / bath.omega_c).exp();
        j * bath.coth_factor(w) * (1.0 - (w * t).cos()) / (w * w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values_are_exact() {
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        assert_eq!(dephasing_coherence(0.0, &bath).unwrap(), 1.0);
        let free = BathSpec::new(0.0, 5.0, 1.0).unwrap();
        assert_eq!(dephasing_coherence(3.0, &free).unwrap(), 1.0);
    }

    #[test]
    fn decays_monotonically_into_the_unit_interval() {
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let mut prev = 1.0;
        for i in 1..=20 {
            let v = dephasing_coherence(i as f64 * 0.25, &bath).unwrap();
            assert!(v > 0.0 && v < prev, "t = {}: {v}", i as f64 * 0.25);
            prev = v;
        }
    }

    #[test]
    fn quadrature_refinement_is_converged() {
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let coarse = decay_exponent(t, &bath);
            // double panel resolution and order
            let panel = bath.panel_width(t) * 0.5;
            let fine = integrate(0.0, bath.cap(), panel, 48, |w| {
                let j = bath.eta * 0.5 * w * (-w / bath.omega_c).exp();
                j * bath.coth_factor(w) * (1.0 - (w * t).cos()) / (w * w)
            });
            assert!(
                (coarse - fine).abs() < 1e-10,
                "t = {t}: {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn high_temperature_limit_scales_with_t_b() {
        // for T >> omega_c the exponent is close to linear in T
        let hot = BathSpec::new(0.1, 1.0, 60.0).unwrap();
        let hotter = BathSpec::new(0.1, 1.0, 120.0).unwrap();
        let e1 = decay_exponent(0.5, &hot);
        let e2 = decay_exponent(0.5, &hotter);
        assert!((e2 / e1 - 2.0).abs() < 0.05, "ratio {}", e2 / e1);
    }
}
