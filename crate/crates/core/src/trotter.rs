use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::schedule::{AnnealingSchedule, ScheduleSampling};
use ndarray::Array2;
use num_complex::Complex64;

/// Contour branch of a propagator factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Forward,
    Backward,
}

impl Branch {
    fn orient(self, z: Complex64) -> Complex64 {
        match self {
            Branch::Forward => z,
            Branch::Backward => z.conj(),
        }
    }
}

/// Single-spin transverse-field propagator exp(+i a dt sigma_x) on the
/// forward branch (conjugated on the backward branch).
pub fn field_factor(a: f64, dt: f64, branch: Branch) -> Array2<Complex64> {
    let th = a * dt;
    let c = Complex64::new(th.cos(), 0.0);
    let s = branch.orient(Complex64::new(0.0, th.sin()));
    ndarray::array![[c, s], [s, c]]
}

/// Two-spin Ising phase exp(+i b dt sigma_z sigma_z), diagonal in the
/// product basis (uu, ud, du, dd); conjugated on the backward branch.
pub fn bond_factor(b: f64, dt: f64, branch: Branch) -> Array2<Complex64> {
    let th = b * dt;
    let mut out = Array2::zeros((4, 4));
    for (i, zz) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        out[[i, i]] = branch.orient(Complex64::new(0.0, th * zz).exp());
    }
    out
}

/// Propagator factors of Trotter step l (0 <= l <= M-1), with the schedule
/// sampled according to `sampling`.
pub fn trotter_factors(
    step: usize,
    grid: &TimeGrid,
    sched: &AnnealingSchedule,
    sampling: ScheduleSampling,
    branch: Branch,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    if step >= grid.m {
        return Err(CoreError::Domain(format!(
            "Trotter step {step} out of range for M = {}",
            grid.m
        )));
    }
    let (a, b) = sched.eval(sampling.fraction(step, grid.m))?;
    Ok((field_factor(a, grid.dt, branch), bond_factor(b, grid.dt, branch)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_generator_gives_identity() {
        let id2 = Array2::eye(2);
        assert_eq!(max_abs_diff(&field_factor(0.0, 0.05, Branch::Forward), &id2), 0.0);
        let id4 = Array2::eye(4);
        assert_eq!(max_abs_diff(&bond_factor(0.0, 0.05, Branch::Backward), &id4), 0.0);
    }

    #[test]
    fn branches_are_elementwise_conjugate() {
        let f = field_factor(0.7, 0.05, Branch::Forward);
        let b = field_factor(0.7, 0.05, Branch::Backward);
        assert_eq!(f.mapv(|z| z.conj()), b);
        let gf = bond_factor(0.3, 0.05, Branch::Forward);
        let gb = bond_factor(0.3, 0.05, Branch::Backward);
        assert_eq!(gf.mapv(|z| z.conj()), gb);
    }

    #[test]
    fn field_factor_is_unitary() {
        let f = field_factor(0.9, 0.05, Branch::Forward);
        let fdag = f.t().mapv(|z| z.conj());
        let prod = fdag.dot(&f);
        assert!(max_abs_diff(&prod, &Array2::eye(2)) < 1e-14);
    }

    #[test]
    fn small_step_deviation_bound() {
        let a = 0.8;
        for &dt in &[1e-3, 1e-4, 1e-5] {
            let f = field_factor(a, dt, Branch::Forward);
            let dev = max_abs_diff(&f, &Array2::eye(2));
            assert!(dev <= a * dt * 1.01, "dev {dev} vs bound {}", a * dt);
        }
    }

    #[test]
    fn bond_phases_follow_zz_pattern() {
        let b = 0.4;
        let dt = 0.05;
        let g = bond_factor(b, dt, Branch::Forward);
        for (i, zz) in [1.0f64, -1.0, -1.0, 1.0].into_iter().enumerate() {
            let expect = Complex64::new(0.0, b * dt * zz).exp();
            assert!((g[[i, i]] - expect).norm() < 1e-15);
            for j in 0..4 {
                if j != i {
                    assert_eq!(g[[i, j]], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn step_factors_sample_midpoint_by_default() {
        let grid = TimeGrid::new(1.0, 0.05, 10.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let (f, g) =
            trotter_factors(0, &grid, &sched, ScheduleSampling::Midpoint, Branch::Forward)
                .unwrap();
        let s = 0.5 / 20.0;
        let (a, b) = sched.eval(s).unwrap();
        assert!(max_abs_diff(&f, &field_factor(a, 0.05, Branch::Forward)) == 0.0);
        assert!(max_abs_diff(&g, &bond_factor(b, 0.05, Branch::Forward)) == 0.0);
        assert!(trotter_factors(20, &grid, &sched, ScheduleSampling::Midpoint, Branch::Forward)
            .is_err());
    }
}
