use crate::error::{CoreError, Result};
use crate::quad;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Ohmic bath with exponential cutoff: J(w) = (eta/2) w exp(-w/omega_c).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BathSpec {
    pub eta: f64,
    pub omega_c: f64,
    pub t_b: f64,
}

/// Frequency integrals run over [0, CAP_FACTOR * max(omega_c, T_B)]; the
/// exponential cutoff makes the tail beyond that < 1e-18 relative.
const CAP_FACTOR: f64 = 50.0;
const PANEL_ORDER: usize = 24;

impl BathSpec {
    pub fn new(eta: f64, omega_c: f64, t_b: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(CoreError::Domain(format!(
                "bath coupling eta must be >= 0, got {eta}"
            )));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(CoreError::Domain(format!(
                "bath cutoff omega_c must be positive, got {omega_c}"
            )));
        }
        if !(t_b >= 0.0) || !t_b.is_finite() {
            return Err(CoreError::Domain(format!(
                "bath temperature must be >= 0, got {t_b}"
            )));
        }
        Ok(Self { eta, omega_c, t_b })
    }

    /// The intended regime has omega_c > T_B; outside it the model is still
    /// evaluated but the caller should surface this.
    pub fn regime_warning(&self) -> Option<String> {
        (self.omega_c <= self.t_b).then(|| {
            format!(
                "bath cutoff omega_c = {} does not exceed T_B = {}; results leave the \
                 intended regime",
                self.omega_c, self.t_b
            )
        })
    }

    /// J(omega) = (eta/2) omega exp(-omega/omega_c).
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(CoreError::Domain(format!(
                "spectral density argument must be >= 0, got {omega}"
            )));
        }
        Ok(0.5 * self.eta * omega * (-omega / self.omega_c).exp())
    }

    /// coth(omega / 2 T_B), with the T_B = 0 limit equal to 1 and a series
    /// expansion below x = 1e-4 so the omega -> 0 end stays finite.
    pub fn coth_factor(&self, omega: f64) -> f64 {
        if self.t_b == 0.0 {
            return 1.0;
        }
        let x = omega / (2.0 * self.t_b);
        if x < 1e-4 {
            1.0 / x + x / 3.0
        } else {
            1.0 / x.tanh()
        }
    }

    pub(crate) fn cap(&self) -> f64 {
        CAP_FACTOR * self.omega_c.max(if self.t_b > 0.0 { self.t_b } else { self.omega_c })
    }

    /// Panel width resolving both the cutoff scale and oscillations up to tau_max.
    pub(crate) fn panel_width(&self, tau_max: f64) -> f64 {
        let mut w = 0.25 * self.omega_c;
        if tau_max > 0.0 {
            w = w.min(std::f64::consts::PI / (4.0 * tau_max));
        }
        w.max(self.cap() / 20_000.0)
    }

    /// Bath autocorrelation c(tau) = int_0^inf J(w) [coth(w/2T_B) cos(w tau) - i sin(w tau)] dw
    /// for tau >= 0; negative tau uses c(-tau) = conj(c(tau)).
    pub fn correlation(&self, tau: f64) -> Complex64 {
        let at = tau.abs();
        let c = self.correlation_nonneg(at, self.panel_width(at));
        if tau < 0.0 {
            c.conj()
        } else {
            c
        }
    }

    /// c(d * dt) for d = 0..=d_max with a shared panel width (resolves the
    /// largest tau, therefore all smaller ones).
    pub fn correlation_table(&self, dt: f64, d_max: usize) -> Vec<Complex64> {
        let panel = self.panel_width(d_max as f64 * dt);
        (0..=d_max)
            .map(|d| self.correlation_nonneg(d as f64 * dt, panel))
            .collect()
    }

    fn correlation_nonneg(&self, tau: f64, panel: f64) -> Complex64 {
        if self.eta == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        quad::integrate_c(0.0, self.cap(), panel, PANEL_ORDER, |w| {
            let j = 0.5 * self.eta * w * (-w / self.omega_c).exp();
            Complex64::new(
                j * self.coth_factor(w) * (w * tau).cos(),
                -j * (w * tau).sin(),
            )
        })
    }

    /// Same integral at doubled panel resolution, for convergence audits.
    pub fn correlation_refined(&self, tau: f64) -> Complex64 {
        let at = tau.abs();
        let c = self.correlation_nonneg(at, 0.5 * self.panel_width(at));
        if tau < 0.0 {
            c.conj()
        } else {
            c
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bath() -> BathSpec {
        BathSpec::new(0.18, 5.0, 1.0).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let b = bath();
        assert_eq!(b.spectral_density(0.0).unwrap(), 0.0);
        // peak value at the cutoff: 0.45 / e
        assert_abs_diff_eq!(
            b.spectral_density(5.0).unwrap(),
            0.45 * (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert!(b.spectral_density(-1.0).is_err());
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let b = bath();
        let peak = b.spectral_density(b.omega_c).unwrap();
        for w in [4.9, 5.1, 3.0, 7.0] {
            assert!(b.spectral_density(w).unwrap() < peak);
        }
    }

    #[test]
    fn correlation_zero_time_is_real_positive() {
        let c0 = bath().correlation(0.0);
        assert!(c0.re > 0.0);
        assert_abs_diff_eq!(c0.im, 0.0, epsilon = 1e-12);
        // frozen from an independent adaptive quadrature of the same integral
        assert_abs_diff_eq!(c0.re, 2.4781278969762806, epsilon = 1e-8);
    }

    #[test]
    fn correlation_conjugate_symmetry() {
        let b = bath();
        for tau in [0.3, 1.7, 4.0] {
            let d = b.correlation(-tau) - b.correlation(tau).conj();
            assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn correlation_quadrature_converged() {
        let b = bath();
        for tau in [0.0, 0.5, 2.0, 9.95] {
            let d = b.correlation(tau) - b.correlation_refined(tau);
            assert!(d.norm() < 1e-10, "tau = {tau}: {}", d.norm());
        }
    }

    #[test]
    fn zero_coupling_vanishes() {
        let b = BathSpec::new(0.0, 5.0, 1.0).unwrap();
        assert_eq!(b.correlation(1.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_temperature_uses_unit_coth() {
        let b = BathSpec::new(0.18, 5.0, 0.0).unwrap();
        assert_eq!(b.coth_factor(3.0), 1.0);
        // c(0) at T = 0: int J dw = (eta/2) omega_c^2
        assert_abs_diff_eq!(
            b.correlation(0.0).re,
            0.5 * 0.18 * 25.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn regime_warning_fires_only_when_cutoff_too_small() {
        assert!(bath().regime_warning().is_none());
        let odd = BathSpec::new(0.18, 0.5, 1.0).unwrap();
        assert!(odd.regime_warning().is_some());
    }
}
