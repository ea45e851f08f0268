//! Brute-force discrete-time path sum for a single driven spin coupled to
//! the bath: every composite path over the folded grid is enumerated, so the
//! result is exact for the discretized dynamics and anchors every sign and
//! windowing convention the compressed machinery must reproduce.

use crate::column::step_transfer;
use crate::error::{CoreError, Result};
use crate::grid::{TimeGrid, SBR, SIG};
use crate::kernel::KernelTable;
use crate::schedule::{AnnealingSchedule, ScheduleSampling};
use ndarray::Array2;
use num_complex::Complex64;

/// Transverse-field drive of the single spin; the Ising bond amplitude has
/// no partner to act on here.
#[derive(Clone, Debug)]
pub enum Drive {
    /// Constant amplitude.
    Fixed(f64),
    /// Annealed amplitude A(s) sampled over the grid's M steps.
    Annealed { sched: AnnealingSchedule, sampling: ScheduleSampling },
}

impl Drive {
    fn amplitude(&self, step: usize, m_total: usize) -> Result<f64> {
        match self {
            Drive::Fixed(a) => Ok(*a),
            Drive::Annealed { sched, sampling } => {
                Ok(sched.eval(sampling.fraction(step, m_total))?.0)
            }
        }
    }
}

/// Exhaustive path-sum model: one spin, M Trotter steps, bath pair couplings.
#[derive(Clone, Debug)]
pub struct SpinBosonPathSum {
    pub grid: TimeGrid,
    pub kernel: KernelTable,
    pub drive: Drive,
}

const MAX_STEPS: usize = 9;

/// Sums e^{i S_0 + S_infl} over all 4^(M+1) composite paths from the
/// initial |+><+| weight and returns the trace-normalized 2x2 reduced
/// density matrix at t = M dt (row = forward spin, 0 meaning up).
pub fn path_sum_rdm(ps: &SpinBosonPathSum) -> Result<Array2<Complex64>> {
    let m = ps.grid.m;
    if m > MAX_STEPS {
        return Err(CoreError::Guard(format!(
            "path sum enumerates 4^(M+1) paths; M = {m} exceeds {MAX_STEPS}"
        )));
    }
    let n_points = ps.grid.n_points();
    let mut kappa = vec![Complex64::new(0.0, 0.0); n_points * n_points];
    for l in 1..n_points {
        for mm in 0..l {
            if ps.kernel.in_window(l, mm) {
                kappa[l * n_points + mm] = ps.kernel.coefficient(l, mm)?;
            }
        }
    }
    let mut transfers = Vec::with_capacity(m);
    for step in 0..m {
        let a = ps.drive.amplitude(step, m)?;
        transfers.push(step_transfer(a, ps.grid.dt));
    }
    let n_conf = 4usize.pow((m + 1) as u32);
    let mut rho: Array2<Complex64> = Array2::zeros((2, 2));
    let mut conf = vec![0usize; m + 1];
    let mut sigma = vec![0.0f64; n_points];
    for lin in 0..n_conf {
        let mut rem = lin;
        for slot in conf.iter_mut() {
            *slot = rem & 3;
            rem >>= 2;
        }
        let mut weight = Complex64::new(0.5, 0.0);
        for (step, t) in transfers.iter().enumerate() {
            weight *= t[[conf[step + 1], conf[step]]];
        }
        for l in 0..n_points {
            let level = ps.grid.level(l);
            sigma[l] =
                if l <= m { SIG[conf[level]] } else { SBR[conf[level]] };
        }
        let mut expo = Complex64::new(0.0, 0.0);
        for l in 1..n_points {
            let row = &kappa[l * n_points..l * n_points + l];
            for (mm, k) in row.iter().enumerate() {
                expo += k * (sigma[l] * sigma[mm]);
            }
        }
        let s_final = conf[m];
        rho[[s_final >> 1, s_final & 1]] += weight * expo.exp();
    }
    let trace = rho[[0, 0]] + rho[[1, 1]];
    if trace.norm() < 1e-300 {
        return Err(CoreError::Numerical("path sum collapsed to zero trace".into()));
    }
    Ok(rho.mapv(|z| z / trace))
}
