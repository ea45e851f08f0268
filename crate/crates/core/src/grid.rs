use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Folded two-branch time grid: t_l = l dt on the forward half (l <= M),
/// mirrored as t_l = (2M+1-l) dt on the backward half.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_a: f64,
    pub dt: f64,
    pub m: usize,
    pub tau_c: f64,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_a: f64, dt: f64, tau_c: f64) -> Result<Self> {
        if !(t_a > 0.0) || !(dt > 0.0) {
            return Err(CoreError::Config(format!(
                "need t_a > 0 and dt > 0, got t_a = {t_a}, dt = {dt}"
            )));
        }
        if !(tau_c > 0.0) {
            return Err(CoreError::Config(format!(
                "memory cutoff tau_c must be positive, got {tau_c}"
            )));
        }
        let ratio = t_a / dt;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) || m < 1.0 {
            return Err(CoreError::Config(format!(
                "t_a / dt = {ratio} is not a positive integer step count"
            )));
        }
        let m = m as usize;
        let times = (0..2 * m + 2)
            .map(|l| if l <= m { l } else { 2 * m + 1 - l } as f64 * dt)
            .collect();
        Ok(Self { t_a, dt, m, tau_c, times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_points(&self) -> usize {
        2 * self.m + 2
    }

    /// Physical time of folded index l.
    pub fn time(&self, l: usize) -> f64 {
        self.times[l]
    }

    /// Level (forward-time slot) of folded index l.
    pub fn level(&self, l: usize) -> usize {
        if l <= self.m {
            l
        } else {
            2 * self.m + 1 - l
        }
    }

    /// +1 on the forward branch, -1 on the backward branch.
    pub fn branch_sign(&self, l: usize) -> f64 {
        if l <= self.m {
            1.0
        } else {
            -1.0
        }
    }

    /// Largest level separation d with d * dt strictly inside the window,
    /// capped at M.
    pub fn window_d_max(&self) -> usize {
        let mut d = ((self.tau_c / self.dt).ceil() as usize).saturating_sub(1);
        while (d + 1) as f64 * self.dt < self.tau_c && d < self.m {
            d += 1;
        }
        while d > 0 && d as f64 * self.dt >= self.tau_c {
            d -= 1;
        }
        d.min(self.m)
    }
}

/// Number of states of the two-branch composite spin variable.
pub const COMP_DIM: usize = 4;

/// Forward-branch spin of each composite state (encoding s = 2 f + b with
/// bit 0 meaning spin up).
pub const SIG: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
/// Backward-branch spin of each composite state.
pub const SBR: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Composite index pairing one forward and one backward spin at equal level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompositeIndex(pub u8);

impl CompositeIndex {
    pub fn encode(fwd: i8, bwd: i8) -> Self {
        debug_assert!(fwd.abs() == 1 && bwd.abs() == 1);
        CompositeIndex((1 - fwd) as u8 | ((1 - bwd) as u8 >> 1))
    }

    pub fn decode(self) -> (i8, i8) {
        let s = self.0 as usize;
        (SIG[s] as i8, SBR[s] as i8)
    }
}
