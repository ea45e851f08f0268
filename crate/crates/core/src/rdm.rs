//! Reduced density matrices of n adjacent bulk sites.
//!
//! Instead of capping the final-time fold of a column, its composite fold
//! index is routed out through the MPO bond and parked on an extra site
//! appended to the left boundary. Columns already opened this way are
//! crossed with identity passthroughs, so after n absorptions the boundary
//! carries n physical fold legs past the time levels. Pairing the time
//! levels with the right boundary leaves a rank-n tensor whose composite
//! indices unpack into the bra and ket spin labels of the density matrix.

use ndarray::{Array1, Array2, Array3, Array4};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::boundary::BoundaryMps;
use crate::column::{Cap, ColumnTensor};
use crate::error::{CoreError, Result};
use crate::mps::{pair_step, MpoTensor};

/// Largest site count whose 4^n open-leg tensor is still cheap to hold.
pub const MAX_RDM_SITES: usize = 8;

/// Negativity beyond which the state is reported rather than trusted.
pub const RDM_TRUST_EPS: f64 = 1e-2;

/// Hermitian, trace-one state of n adjacent bulk sites. Basis ordering
/// matches the exact-diagonalization oracle: index bit 0 means spin up and
/// the leftmost site is the most significant bit.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    pub n_sites: usize,
    pub data: Array2<Complex64>,
    pub trace_norm_applied: bool,
    /// Largest |rho - rho^dagger| entry before symmetrization.
    pub hermiticity: f64,
    /// Truncation-induced negativity max(0, -lambda_min) after
    /// symmetrization and normalization.
    pub eps_pos: f64,
    pub trusted: bool,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Real part of Tr(rho op); rho is Hermitian so this is exact for
    /// Hermitian operators.
    pub fn expectation(&self, op: &Array2<Complex64>) -> Result<f64> {
        let d = self.dim();
        if op.dim() != (d, d) {
            return Err(CoreError::Shape(format!(
                "operator {:?} does not match a {}-site state",
                op.dim(),
                self.n_sites
            )));
        }
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                tr += self.data[[i, j]] * op[[j, i]];
            }
        }
        Ok(tr.re)
    }

    /// Marginal over the rightmost (least significant) sites.
    pub fn marginal(&self, keep: usize) -> Result<ReducedDensityMatrix> {
        if keep == 0 || keep > self.n_sites {
            return Err(CoreError::Config(format!(
                "cannot keep {keep} of {} sites",
                self.n_sites
            )));
        }
        let dk = 1usize << keep;
        let dt = 1usize << (self.n_sites - keep);
        let mut data = Array2::zeros((dk, dk));
        for i in 0..dk {
            for j in 0..dk {
                for t in 0..dt {
                    data[[i, j]] += self.data[[i * dt + t, j * dt + t]];
                }
            }
        }
        Ok(ReducedDensityMatrix {
            n_sites: keep,
            data,
            trace_norm_applied: self.trace_norm_applied,
            hermiticity: self.hermiticity,
            eps_pos: self.eps_pos,
            trusted: self.trusted,
        })
    }
}

/// Top-of-column tensor with the fold index left open on the outgoing MPO
/// bond instead of contracted with cap weights.
fn open_top(col: &ColumnTensor) -> Result<MpoTensor> {
    let k = col.upto_step;
    let d = &col.dressed.tensors[k];
    let h = &col.legs[k];
    let (nl, _, nr) = d.dim();
    if nr != 1 {
        return Err(CoreError::Shape(format!(
            "column top carries an open bond of dimension {nr}"
        )));
    }
    let lg = h.dim().0;
    let mut out = Array4::zeros((nl, lg, lg, 4));
    for s in 0..4 {
        for a in 0..lg {
            let ha = h[[a, s]];
            for b in 0..lg {
                let f = ha * h[[b, s]];
                for l in 0..nl {
                    out[[l, a, b, s]] = d[[l, s, 0]] * f;
                }
            }
        }
    }
    Ok(out)
}

/// Identity on an already-opened fold leg while the routed index of the
/// current column rides past on the MPO bond.
fn passthrough() -> MpoTensor {
    let mut out = Array4::zeros((4, 4, 4, 4));
    for v in 0..4 {
        for s in 0..4 {
            out[[v, s, s, v]] = Complex64::new(1.0, 0.0);
        }
    }
    out
}

/// Terminal copy: deposits the routed fold index onto a fresh dummy site.
fn terminal() -> MpoTensor {
    let mut out = Array4::zeros((4, 1, 4, 1));
    for s in 0..4 {
        out[[s, 0, s, 0]] = Complex64::new(1.0, 0.0);
    }
    out
}

/// Opens the final-time fold of `n` adjacent columns between the converged
/// boundaries and assembles their joint reduced density matrix. The raw
/// tensor is symmetrized and trace-normalized; the asymmetry it had before
/// symmetrization and the negativity left after it are reported.
pub fn extract_rdm(
    left: &BoundaryMps,
    right: &BoundaryMps,
    col: &ColumnTensor,
    n: usize,
) -> Result<ReducedDensityMatrix> {
    if n == 0 || n > MAX_RDM_SITES {
        return Err(CoreError::Config(format!(
            "site count must be 1..={MAX_RDM_SITES}, got {n}"
        )));
    }
    let dims = col.leg_dims();
    if left.mps.phys_dims() != dims || right.mps.phys_dims() != dims {
        return Err(CoreError::Shape(
            "boundary physical dimensions do not match column legs".into(),
        ));
    }
    let top = col.upto_step;
    let mut work = left.mps.clone();
    for opened in 0..n {
        work.tensors.push(Array3::ones((1, 1, 1)));
        let last = work.len() - 1;
        let open = open_top(col)?;
        work.apply_mpo_with(
            |k| {
                if k < top {
                    col.mpo_tensor(k, Cap::Trace)
                } else if k == top {
                    open.clone()
                } else if k < last {
                    passthrough()
                } else {
                    terminal()
                }
            },
            left.chi_s,
            col.svd_tol,
        )?;
        let w = work.normalize_tail();
        if w == 0.0 || !w.is_finite() {
            return Err(CoreError::Numerical(format!(
                "boundary norm degenerated to {w} while opening column {opened}"
            )));
        }
    }

    // Close the time levels against the right boundary, then sweep the
    // environment through the n parked fold legs.
    let mut env: Array2<Complex64> = Array2::ones((1, 1));
    for k in 0..=top {
        env = pair_step(&env, &work.tensors[k], &right.mps.tensors[k]);
    }
    let mut acc = env
        .t()
        .as_standard_layout()
        .into_owned();
    for k in top + 1..work.len() {
        let t = &work.tensors[k];
        let (al, d, ar) = t.dim();
        let tm = t
            .to_owned()
            .into_shape_with_order((al, d * ar))
            .expect("contiguous tensor");
        let rows = acc.nrows();
        acc = acc
            .dot(&tm)
            .into_shape_with_order((rows * d, ar))
            .expect("element count preserved");
    }
    let flat: Array1<Complex64> = acc.column(0).to_owned();

    // Composite fold value 2f+b per site: f bits form the row, b bits the
    // column, leftmost site most significant.
    let dim = 1usize << n;
    let mut raw: Array2<Complex64> = Array2::zeros((dim, dim));
    for (c, v) in flat.iter().enumerate() {
        let mut row = 0usize;
        let mut colb = 0usize;
        for site in 0..n {
            let s = (c >> (2 * (n - 1 - site))) & 3;
            row = row << 1 | s >> 1;
            colb = colb << 1 | (s & 1);
        }
        raw[[row, colb]] = *v;
    }

    // Dividing by the complex trace first cancels the boundary's arbitrary
    // scale AND phase; only then is the Hermiticity defect a meaningful
    // truncation diagnostic rather than a phase artifact.
    let trace: Complex64 = (0..dim).map(|i| raw[[i, i]]).sum();
    if trace.norm() < 1e-300 {
        return Err(CoreError::Numerical(
            "reduced state has vanishing trace".into(),
        ));
    }
    raw.mapv_inplace(|v| v / trace);
    let mut hermiticity = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            hermiticity = hermiticity.max((raw[[i, j]] - raw[[j, i]].conj()).norm());
        }
    }
    // Trace stays exactly one: it was one before and is real afterwards.
    let mut sym = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            sym[[i, j]] = (raw[[i, j]] + raw[[j, i]].conj()) * 0.5;
        }
    }

    let (vals, _) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| CoreError::Numerical(format!("eigendecomposition failed: {e}")))?;
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps_pos = (-min).max(0.0);

    Ok(ReducedDensityMatrix {
        n_sites: n,
        data: sym,
        trace_norm_applied: true,
        hermiticity,
        eps_pos,
        trusted: eps_pos <= RDM_TRUST_EPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::boundary::{itebd_fixed_point, measure_all};
    use crate::column::build_column;
    use crate::grid::TimeGrid;
    use crate::influence::{InfluenceBuilder, InfluenceMps};
    use crate::kernel::KernelTable;
    use crate::oracles::ed_bulk_rdm;
    use crate::schedule::{AnnealingSchedule, ScheduleSampling};

    fn influence_at(
        grid: &TimeGrid,
        bath: &BathSpec,
        step: usize,
        chi: usize,
        tol: f64,
    ) -> InfluenceMps {
        let kernel = KernelTable::build(grid, bath).unwrap();
        let mut builder = InfluenceBuilder::new(&kernel, chi, tol).unwrap();
        for _ in 0..=step {
            builder.grow().unwrap();
        }
        builder.snapshot().unwrap()
    }

    fn pauli_x() -> Array2<Complex64> {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = Complex64::new(1.0, 0.0);
        m[[1, 0]] = Complex64::new(1.0, 0.0);
        m
    }

    fn zz_op() -> Array2<Complex64> {
        let mut m = Array2::zeros((4, 4));
        for i in 0..4usize {
            let sign = if (i & 1) == (i >> 1) { 1.0 } else { -1.0 };
            m[[i, i]] = Complex64::new(sign, 0.0);
        }
        m
    }

    #[test]
    fn fresh_single_site_is_plus_state() {
        let grid = TimeGrid::new(1.0, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let infl = influence_at(&grid, &bath, 0, 16, 1e-12);
        let col = build_column(&infl, &grid, &sched, 0).unwrap();
        let fp = itebd_fixed_point(&col, 8, 1e-10, 40).unwrap();
        let rho = extract_rdm(fp.left(), fp.right(), &col, 1).unwrap();
        assert_eq!(rho.n_sites, 1);
        assert!(rho.trace_norm_applied);
        assert!(rho.trusted);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (rho.data[[i, j]] - Complex64::new(0.5, 0.0)).norm() < 1e-12,
                    "entry ({i},{j}) = {}",
                    rho.data[[i, j]]
                );
            }
        }
    }

    #[test]
    fn moments_match_capped_measurements() {
        let grid = TimeGrid::new(0.4, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let infl = influence_at(&grid, &bath, 8, 32, 1e-10);
        let col = build_column(&infl, &grid, &sched, 8).unwrap();
        let fp = itebd_fixed_point(&col, 32, 1e-9, 200).unwrap();
        let m = measure_all(fp.left(), fp.right(), &col).unwrap();
        let rho1 = extract_rdm(fp.left(), fp.right(), &col, 1).unwrap();
        let rho2 = extract_rdm(fp.left(), fp.right(), &col, 2).unwrap();
        assert!((rho1.expectation(&pauli_x()).unwrap() - m.sx).abs() < 1e-7);
        assert!((rho2.expectation(&zz_op()).unwrap() - m.zz).abs() < 1e-7);
        assert!(rho1.hermiticity < 1e-8);
        assert!(rho2.hermiticity < 1e-8);
        assert!(rho1.eps_pos <= 1e-9);
        assert!(rho2.eps_pos <= 1e-6);
        let marg = rho2.marginal(1).unwrap();
        let mut diff = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                diff = diff.max((marg.data[[i, j]] - rho1.data[[i, j]]).norm());
            }
        }
        assert!(diff < 1e-7, "marginal deviates by {diff}");
    }

    #[test]
    fn closed_system_rdm_matches_ed_bulk() {
        let grid = TimeGrid::new(1.0, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.0, 5.0, 1.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let step = 12;
        let infl = influence_at(&grid, &bath, step, 64, 1e-10);
        let col = build_column(&infl, &grid, &sched, step).unwrap();
        let fp = itebd_fixed_point(&col, 48, 1e-9, 400).unwrap();
        for k in [1usize, 2] {
            let rho = extract_rdm(fp.left(), fp.right(), &col, k).unwrap();
            let exact = ed_bulk_rdm(
                12,
                &sched,
                &grid,
                ScheduleSampling::Midpoint,
                step,
                k,
            )
            .unwrap();
            let mut diff = 0.0f64;
            for i in 0..rho.dim() {
                for j in 0..rho.dim() {
                    diff = diff.max((rho.data[[i, j]] - exact[[i, j]]).norm());
                }
            }
            assert!(diff < 1e-3, "{k}-site deviation {diff}");
            assert!(rho.hermiticity < 1e-8);
            assert!(rho.eps_pos <= 1e-4);
        }
    }

    #[test]
    fn eight_site_state_keeps_invariants() {
        let grid = TimeGrid::new(0.4, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let infl = influence_at(&grid, &bath, 4, 32, 1e-10);
        let col = build_column(&infl, &grid, &sched, 4).unwrap();
        let fp = itebd_fixed_point(&col, 64, 1e-9, 200).unwrap();
        let rho = extract_rdm(fp.left(), fp.right(), &col, 8).unwrap();
        assert_eq!(rho.dim(), 256);
        let tr: Complex64 = (0..256).map(|i| rho.data[[i, i]]).sum();
        assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rho.hermiticity < 1e-8, "{}", rho.hermiticity);
        assert!(rho.eps_pos <= 1e-4, "{}", rho.eps_pos);
        assert!(rho.trusted);
        // translation invariance: both single-site marginals of the central
        // pair agree with the directly extracted one-site state
        let rho2 = rho.marginal(2).unwrap();
        let rho1 = extract_rdm(fp.left(), fp.right(), &col, 1).unwrap();
        let keep_right = rho2.marginal(1).unwrap();
        let mut diff = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                diff = diff.max((keep_right.data[[i, j]] - rho1.data[[i, j]]).norm());
            }
        }
        assert!(diff < 1e-6, "translation defect {diff}");
    }

    #[test]
    fn rejects_out_of_range_site_counts() {
        let grid = TimeGrid::new(1.0, 0.05, 10.0).unwrap();
        let bath = BathSpec::new(0.18, 5.0, 1.0).unwrap();
        let sched = AnnealingSchedule::new(1.0).unwrap();
        let infl = influence_at(&grid, &bath, 0, 16, 1e-12);
        let col = build_column(&infl, &grid, &sched, 0).unwrap();
        let fp = itebd_fixed_point(&col, 8, 1e-10, 40).unwrap();
        assert!(extract_rdm(fp.left(), fp.right(), &col, 0).is_err());
        assert!(extract_rdm(fp.left(), fp.right(), &col, 9).is_err());
    }
}
