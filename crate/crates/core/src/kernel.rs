use crate::bath::BathSpec;
use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use num_complex::Complex64;

/// Bath-kernel coefficients on the folded grid, cached by level separation.
///
/// A pair (l, m) couples through kappa_{l,m} = -zeta_l zeta_m dt^2 c(t_l - t_m)
/// where zeta is the branch sign and c the bath correlation evaluated at the
/// folded (physical) time separation. Only separations strictly inside the
/// memory window |t_l - t_m| < tau_c are stored.
#[derive(Clone, Debug)]
pub struct KernelTable {
    dt: f64,
    m: usize,
    d_max: usize,
    couplings: Vec<Complex64>,
}

impl KernelTable {
    pub fn build(grid: &TimeGrid, bath: &BathSpec) -> Result<Self> {
        let d_max = grid.window_d_max();
        let couplings = bath.correlation_table(grid.dt, d_max);
        Ok(Self { dt: grid.dt, m: grid.m, d_max, couplings })
    }

    /// Table with externally supplied correlations c(d·dt); for synthetic
    /// fixtures and cache round-trips.
    pub fn from_correlations(
        dt: f64,
        m: usize,
        couplings: Vec<Complex64>,
    ) -> Result<Self> {
        if couplings.is_empty() || couplings.len() > m + 1 {
            return Err(CoreError::Config(format!(
                "need 1..=M+1 correlation entries, got {} for M = {m}",
                couplings.len()
            )));
        }
        let d_max = couplings.len() - 1;
        Ok(Self { dt, m, d_max, couplings })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Largest in-window level separation.
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Bath correlation c(d * dt) for separations inside the window.
    pub fn correlation(&self, d: usize) -> Result<Complex64> {
        self.couplings.get(d).copied().ok_or(CoreError::OutOfWindow {
            sep: d as f64 * self.dt,
            tau_c: (self.d_max + 1) as f64 * self.dt,
        })
    }

    pub fn correlations(&self) -> &[Complex64] {
        &self.couplings
    }

    /// kappa_{l,m} for folded indices l > m.
    pub fn coefficient(&self, l: usize, m: usize) -> Result<Complex64> {
        if l <= m || l > 2 * self.m + 1 {
            return Err(CoreError::Domain(format!(
                "kernel coefficient needs 0 <= m < l <= 2M+1, got l = {l}, m = {m}"
            )));
        }
        let fold = |i: usize| if i <= self.m { i } else { 2 * self.m + 1 - i };
        let sign = |i: usize| if i <= self.m { 1.0 } else { -1.0 };
        let (kl, km) = (fold(l) as isize, fold(m) as isize);
        let d = (kl - km).unsigned_abs();
        if d > self.d_max {
            return Err(CoreError::OutOfWindow {
                sep: d as f64 * self.dt,
                tau_c: (self.d_max + 1) as f64 * self.dt,
            });
        }
        let c = if kl >= km { self.couplings[d] } else { self.couplings[d].conj() };
        Ok(-sign(l) * sign(m) * self.dt * self.dt * c)
    }

    /// Whether folded indices (l, m) are coupled at all.
    pub fn in_window(&self, l: usize, m: usize) -> bool {
        let fold = |i: usize| if i <= self.m { i } else { 2 * self.m + 1 - i };
        fold(l).abs_diff(fold(m)) <= self.d_max
    }
}
