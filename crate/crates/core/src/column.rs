//! One lattice site's operator column for the space-by-time network.
//!
//! A column stacks, over composite time levels 0..=m, the influence MPS
//! dressed with the on-site annealing factors (initial-state weight and
//! transverse-field rotations on both branches), plus per-level spatial leg
//! factors obtained by splitting the Ising bond phases symmetrically between
//! neighboring sites. Closing the fold level with an observable cap turns the
//! column into an MPO over time whose in/out legs are the 4-dimensional
//! spatial legs the boundary contraction consumes.

use crate::error::{CoreError, Result};
use crate::grid::{TimeGrid, SBR, SIG};
use crate::influence::InfluenceMps;
use crate::mps::{MpoTensor, Mps};
use crate::schedule::{AnnealingSchedule, ScheduleSampling};
use crate::trotter::{field_factor, Branch};
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;

/// Observable weight contracted into the fold level of one column:
/// entry s holds <backward spin| O |forward spin> on the composite pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cap {
    /// Partial trace over this site.
    Trace,
    /// sigma^x matrix element.
    Sx,
    /// sigma^z matrix element; two adjacent Z caps give the bond correlator.
    Z,
}

impl Cap {
    pub fn weights(self) -> [Complex64; 4] {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            Cap::Trace => [o, z, z, o],
            Cap::Sx => [z, o, o, z],
            Cap::Z => [o, z, z, -o],
        }
    }
}

/// Evolution column for steps 0..upto_step of an M-step anneal.
#[derive(Clone, Debug)]
pub struct ColumnTensor {
    /// Site k: [nu_{k-1}, S^(k), nu_k]; influence times initial weight and
    /// field transfers.
    pub dressed: Mps,
    /// legs[k]: [leg, S] split bond-phase factor; level 0 carries a trivial
    /// leg of dimension 1, levels >= 1 dimension 4.
    pub legs: Vec<Array2<Complex64>>,
    pub upto_step: usize,
    pub m_total: usize,
    /// Truncation threshold the contraction engine inherits for this column.
    pub svd_tol: f64,
}

impl ColumnTensor {
    /// Wraps pre-built parts; lengths and leg dimensions must be consistent.
    pub fn assemble(
        dressed: Mps,
        legs: Vec<Array2<Complex64>>,
        upto_step: usize,
        m_total: usize,
        svd_tol: f64,
    ) -> Result<Self> {
        if dressed.len() != upto_step + 1 || legs.len() != upto_step + 1 {
            return Err(CoreError::Shape(format!(
                "column needs {} levels, got {} dressed and {} leg entries",
                upto_step + 1,
                dressed.len(),
                legs.len()
            )));
        }
        if dressed.phys_dims().iter().any(|&d| d != 4) {
            return Err(CoreError::Shape("composite legs must have dimension 4".into()));
        }
        if legs[0].dim() != (1, 4) || legs[1..].iter().any(|h| h.dim() != (4, 4)) {
            return Err(CoreError::Shape("leg factors must be 1x4 then 4x4".into()));
        }
        if upto_step > m_total {
            return Err(CoreError::Domain(format!(
                "upto_step {upto_step} exceeds anneal length {m_total}"
            )));
        }
        Ok(Self { dressed, legs, upto_step, m_total, svd_tol })
    }

    /// Spatial leg dimension per level: [1, 4, 4, ..].
    pub fn leg_dims(&self) -> Vec<usize> {
        self.legs.iter().map(|h| h.dim().0).collect()
    }

    /// MPO tensor [nu, leg_in, leg_out, nu'] at level k with the fold level
    /// closed by `cap`. The symmetric leg split makes it leg-exchange
    /// symmetric, so one fixed point serves both boundary sides.
    pub fn mpo_tensor(&self, k: usize, cap: Cap) -> MpoTensor {
        let d = &self.dressed.tensors[k];
        let h = &self.legs[k];
        let (nl, _, nr) = d.dim();
        let lg = h.dim().0;
        let fold = k == self.upto_step;
        let w = cap.weights();
        let mut out = Array4::zeros((nl, lg, lg, nr));
        for s in 0..4 {
            let cw = if fold { w[s] } else { Complex64::new(1.0, 0.0) };
            if cw == Complex64::new(0.0, 0.0) {
                continue;
            }
            for a in 0..lg {
                let ha = h[[a, s]] * cw;
                for b in 0..lg {
                    let f = ha * h[[b, s]];
                    for l in 0..nl {
                        for r in 0..nr {
                            out[[l, a, b, r]] += d[[l, s, r]] * f;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Two-branch transfer for one Trotter step: forward rotation times the
/// backward conjugate, indexed by composite values [new, old].
pub fn step_transfer(a: f64, dt: f64) -> Array2<Complex64> {
    let ff = field_factor(a, dt, Branch::Forward);
    let fb = field_factor(a, dt, Branch::Backward);
    let mut t = Array2::zeros((4, 4));
    for sn in 0..4 {
        for so in 0..4 {
            t[[sn, so]] = ff[[sn >> 1, so >> 1]] * fb[[sn & 1, so & 1]];
        }
    }
    t
}

/// Rank-4 symmetric split of the two-branch bond phase
/// exp(i theta zf zf') exp(-i theta zb zb') = sum_a h[a,S] h[a,S'].
pub fn leg_factor(theta: f64) -> Array2<Complex64> {
    let c = Complex64::new(theta.cos(), 0.0).sqrt();
    let sf = (Complex64::i() * theta.sin()).sqrt();
    let sb = (-Complex64::i() * theta.sin()).sqrt();
    let mut h = Array2::zeros((4, 4));
    for s in 0..4 {
        let u = [c, sf * SIG[s]];
        let v = [c, sb * SBR[s]];
        for (af, uf) in u.iter().enumerate() {
            for (ab, vb) in v.iter().enumerate() {
                h[[2 * af + ab, s]] = uf * vb;
            }
        }
    }
    h
}

/// On-site weight of the bare annealed spin as an MPS over composite levels:
/// the uniform initial weight 1/2 at level 0 (both branches start along +x)
/// chained with the per-step two-branch field transfers.
pub fn field_state(transfers: &[Array2<Complex64>]) -> Mps {
    let m = transfers.len();
    let half = Complex64::new(0.5, 0.0);
    if m == 0 {
        let mut t0 = Array3::zeros((1, 4, 1));
        for s in 0..4 {
            t0[[0, s, 0]] = half;
        }
        return Mps { tensors: vec![t0] };
    }
    let mut tensors = Vec::with_capacity(m + 1);
    let mut t0 = Array3::zeros((1, 4, 4));
    for s in 0..4 {
        t0[[0, s, s]] = half;
    }
    tensors.push(t0);
    for (k, tr) in transfers.iter().enumerate() {
        let last = k + 1 == m;
        let mut t = Array3::zeros((4, 4, if last { 1 } else { 4 }));
        for sn in 0..4 {
            for so in 0..4 {
                t[[so, sn, if last { 0 } else { sn }]] = tr[[sn, so]];
            }
        }
        tensors.push(t);
    }
    Mps { tensors }
}

/// Column for evolution from t = 0 to t = upto_step * dt, with the schedule
/// sampled per `sampling` over the full M-step anneal. At upto_step = 0 no
/// evolution has happened, so the column carries the initial weight alone and
/// the influence input is ignored.
pub fn build_column_sampled(
    infl: &InfluenceMps,
    grid: &TimeGrid,
    sched: &AnnealingSchedule,
    sampling: ScheduleSampling,
    upto_step: usize,
) -> Result<ColumnTensor> {
    let m_total = grid.m;
    if upto_step > m_total {
        return Err(CoreError::Domain(format!(
            "upto_step {upto_step} exceeds grid height {m_total}"
        )));
    }
    let mut legs = Vec::with_capacity(upto_step + 1);
    legs.push(Array2::ones((1, 4)));
    let mut transfers = Vec::with_capacity(upto_step);
    for l in 0..upto_step {
        let (a, b) = sched.eval(sampling.fraction(l, m_total))?;
        transfers.push(step_transfer(a, grid.dt));
        legs.push(leg_factor(b * grid.dt));
    }
    let field = field_state(&transfers);
    let dressed = if upto_step == 0 {
        field
    } else {
        if infl.mps.len() != upto_step + 1 {
            return Err(CoreError::Shape(format!(
                "influence spans {} levels but the column needs {}",
                infl.mps.len(),
                upto_step + 1
            )));
        }
        let mut dressed = infl.mps.clone();
        dressed.apply_mpo_with(
            |k| {
                let f = &field.tensors[k];
                let (bl, _, br) = f.dim();
                let mut w = Array4::zeros((bl, 4, 4, br));
                for l in 0..bl {
                    for s in 0..4 {
                        for r in 0..br {
                            w[[l, s, s, r]] = f[[l, s, r]];
                        }
                    }
                }
                w
            },
            4 * infl.chi_t,
            infl.svd_tol,
        )?;
        dressed
    };
    ColumnTensor::assemble(dressed, legs, upto_step, m_total, infl.svd_tol)
}

/// Same with the default midpoint schedule sampling.
pub fn build_column(
    infl: &InfluenceMps,
    grid: &TimeGrid,
    sched: &AnnealingSchedule,
    upto_step: usize,
) -> Result<ColumnTensor> {
    build_column_sampled(infl, grid, sched, ScheduleSampling::Midpoint, upto_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::influence::compress_influence;
    use crate::kernel::KernelTable;
    use crate::trotter::bond_factor;
    use ndarray::IxDyn;

    #[test]
    fn field_state_contracts_to_transfer_chain() {
        let t1 = step_transfer(0.7, 0.05);
        let t2 = step_transfer(0.3, 0.05);
        let mps = field_state(&[t1.clone(), t2.clone()]);
        let dense = mps.to_dense().unwrap();
        for s0 in 0..4 {
            for s1 in 0..4 {
                for s2 in 0..4 {
                    let expect = Complex64::new(0.5, 0.0) * t1[[s1, s0]] * t2[[s2, s1]];
                    let got = dense[IxDyn(&[s0, s1, s2])];
                    assert!((got - expect).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn transfer_preserves_trace_pairing() {
        // contracting the trace cap through one transfer gives the trace cap
        // again: sum over sn with fn = bn of t[sn, so] is 1 iff fo = bo
        let t = step_transfer(0.9, 0.05);
        for so in 0..4 {
            let mut tot = Complex64::new(0.0, 0.0);
            for f in 0..2 {
                tot += t[[2 * f + f, so]];
            }
            let expect = if (so >> 1) == (so & 1) { 1.0 } else { 0.0 };
            assert!((tot - Complex64::new(expect, 0.0)).norm() < 1e-14, "so {so}");
        }
    }

    #[test]
    fn leg_split_recovers_bond_phases() {
        let theta: f64 = 0.04;
        let h = leg_factor(theta);
        let fwd = bond_factor(theta / 0.05, 0.05, Branch::Forward);
        let bwd = bond_factor(theta / 0.05, 0.05, Branch::Backward);
        let zz = [1.0, -1.0, -1.0, 1.0];
        for s in 0..4 {
            for sp in 0..4 {
                let mut got = Complex64::new(0.0, 0.0);
                for a in 0..4 {
                    got += h[[a, s]] * h[[a, sp]];
                }
                // forward phase on the forward pair, conjugate on backward
                let pf = (s >> 1, sp >> 1);
                let pb = (s & 1, sp & 1);
                let idf = (pf.0 * 2 + pf.1) as usize;
                let idb = (pb.0 * 2 + pb.1) as usize;
                let expect = fwd[[idf, idf]] * bwd[[idb, idb]];
                assert!((got - expect).norm() < 1e-13, "s {s} sp {sp}");
                let _ = zz;
            }
        }
    }

    #[test]
    fn zero_field_column_reduces_to_sojourn_sum() {
        // with A = 0 the transfers conserve the composite value and the trace
        // cap keeps only the two sojourns, so the capped column contraction
        // over any fixed leg configuration is a two-term sum
        let transfers = vec![step_transfer(0.0, 0.05); 3];
        let field = field_state(&transfers);
        let legs = vec![
            Array2::ones((1, 4)),
            leg_factor(0.02),
            leg_factor(0.03),
            leg_factor(0.04),
        ];
        let col = ColumnTensor::assemble(field, legs.clone(), 3, 3, 0.0).unwrap();
        let ws: Vec<_> = (0..=3).map(|k| col.mpo_tensor(k, Cap::Trace)).collect();
        let mut conf = [0usize; 4];
        let mut count = 0usize;
        for lin in 0..64usize {
            let mut rem = lin;
            for k in (1..4).rev() {
                conf[k] = rem % 4;
                rem /= 4;
            }
            conf[0] = 0;
            // a single shared configuration for both in and out legs
            let mut got = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
            for k in 0..=3 {
                let w = &ws[k];
                let (nl, _, _, nr) = w.dim();
                let mut next = Array2::zeros((1, nr));
                for l in 0..nl {
                    for r in 0..nr {
                        next[[0, r]] += got[[0, l]] * w[[l, conf[k], conf[k], r]];
                    }
                }
                got = next;
            }
            let mut expect = Complex64::new(0.0, 0.0);
            for s in [0usize, 3] {
                let mut term = Complex64::new(0.5, 0.0);
                for k in 0..=3 {
                    let h = &legs[k];
                    term *= h[[conf[k], s]] * h[[conf[k], s]];
                }
                expect += term;
            }
            assert!(
                (got[[0, 0]] - expect).norm() < 1e-13,
                "legs {conf:?}: {} vs {expect}",
                got[[0, 0]]
            );
            count += 1;
        }
        assert_eq!(count, 64);
    }

    #[test]
    fn fold_caps_on_fresh_state_give_known_moments() {
        // upto_step = 0: column is the initial weight alone; caps evaluate
        // Tr rho = 1, <sx> = 1, <z> = 0 on |+><+|
        let grid = TimeGrid::new(0.2, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let kernel = KernelTable::build(&grid, &bath).unwrap();
        let infl = compress_influence(&grid, &kernel, 8, 1e-12).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let col = build_column(&infl, &grid, &sched, 0).unwrap();
        assert_eq!(col.dressed.len(), 1);
        let value = |cap: Cap| {
            let w = col.mpo_tensor(0, cap);
            w[[0, 0, 0, 0]]
        };
        assert!((value(Cap::Trace) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((value(Cap::Sx) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(value(Cap::Z).norm() < 1e-14);
    }

    #[test]
    fn column_heights_validate() {
        let grid = TimeGrid::new(0.2, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let kernel = KernelTable::build(&grid, &bath).unwrap();
        let infl = compress_influence(&grid, &kernel, 8, 1e-12).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        assert!(build_column(&infl, &grid, &sched, 5).is_err());
        assert!(build_column(&infl, &grid, &sched, 2).is_err()); // wrong snapshot height
        assert!(build_column(&infl, &grid, &sched, 4).is_ok());
    }

    #[test]
    fn dressed_column_reproduces_influence_times_field() {
        let grid = TimeGrid::new(0.15, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let kernel = KernelTable::build(&grid, &bath).unwrap();
        let infl = compress_influence(&grid, &kernel, 64, 0.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let col = build_column(&infl, &grid, &sched, 3).unwrap();
        let dense = col.dressed.to_dense().unwrap();
        let infl_dense = infl.mps.to_dense().unwrap();
        let mut transfers = Vec::new();
        for l in 0..3 {
            let (a, _) = sched
                .eval(ScheduleSampling::Midpoint.fraction(l, grid.m))
                .unwrap();
            transfers.push(step_transfer(a, grid.dt));
        }
        let field_dense = field_state(&transfers).to_dense().unwrap();
        for (i, v) in dense.iter().enumerate() {
            let expect = infl_dense.as_slice().unwrap()[i] * field_dense.as_slice().unwrap()[i];
            assert!((v - expect).norm() < 1e-10);
        }
    }
}
