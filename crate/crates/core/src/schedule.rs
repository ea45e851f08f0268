use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Annealing schedule A(s) = (1 - s)^alpha, B(s) = s.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub alpha: f64,
}

impl AnnealingSchedule {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CoreError::Domain(format!(
                "schedule exponent must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    /// (A(s), B(s)) for s in [0, 1].
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(CoreError::Domain(format!(
                "anneal fraction s = {s} outside [0, 1]"
            )));
        }
        Ok(((1.0 - s).powf(self.alpha), s))
    }
}

/// Where within a Trotter step the schedule is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleSampling {
    /// s = (l + 1/2) / M for step l, the default.
    Midpoint,
    /// s = l / M, the step's left edge.
    Endpoint,
}

impl ScheduleSampling {
    /// Schedule argument for step `l` of `m_total` steps covering [0, t_a].
    pub fn fraction(&self, l: usize, m_total: usize) -> f64 {
        match self {
            ScheduleSampling::Midpoint => (l as f64 + 0.5) / m_total as f64,
            ScheduleSampling::Endpoint => l as f64 / m_total as f64,
        }
    }
}

impl std::str::FromStr for ScheduleSampling {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(ScheduleSampling::Midpoint),
            "endpoint" => Ok(ScheduleSampling::Endpoint),
            other => Err(CoreError::Config(format!(
                "unknown schedule sampling '{other}' (expected midpoint or endpoint)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn endpoints_are_pinned_for_any_alpha() {
        for alpha in [0.25, 0.5, 1.0, 2.0, 3.0, 7.5] {
            let sched = AnnealingSchedule::new(alpha).unwrap();
            assert_eq!(sched.eval(0.0).unwrap(), (1.0, 0.0));
            assert_eq!(sched.eval(1.0).unwrap(), (0.0, 1.0));
        }
    }

    #[test]
    fn interior_value() {
        let sched = AnnealingSchedule::new(2.0).unwrap();
        let (a, b) = sched.eval(0.5).unwrap();
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn monotonicity_on_a_grid() {
        let sched = AnnealingSchedule::new(0.7).unwrap();
        let mut prev = sched.eval(0.0).unwrap();
        for i in 1..=100 {
            let cur = sched.eval(i as f64 / 100.0).unwrap();
            assert!(cur.0 <= prev.0 && cur.1 >= prev.1);
            prev = cur;
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let sched = AnnealingSchedule::new(1.0).unwrap();
        assert!(sched.eval(-0.01).is_err());
        assert!(sched.eval(1.01).is_err());
        assert!(AnnealingSchedule::new(0.0).is_err());
        assert!(AnnealingSchedule::new(-1.0).is_err());
    }
}
