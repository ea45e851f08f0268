//! Influence functional on the folded grid, compressed to an MPS.
//!
//! With pairwise couplings kappa_{l,m} the influence weight of a composite
//! path factorizes into per-level terms: an equal-time self factor
//! exp(dt^2 Re c(0) sigma sigmabar) and, for each level separation d inside
//! the memory window, a pair factor that depends on the newer level only
//! through its blip value sigma - sigmabar in {0, +2, -2}. The builder grows
//! the MPS one level at a time, routing the new level's blip class through a
//! 3-state channel to the at most `d_max` older levels it couples to, then
//! re-truncates the affected window.

use crate::error::{CoreError, Result};
use crate::grid::{TimeGrid, SBR, SIG};
use crate::kernel::KernelTable;
use crate::mps::{svd_trunc, Mps};
use ndarray::{Array2, Array3, ArrayD, IxDyn};
use num_complex::Complex64;

/// Blip class of each composite value: 0 -> sojourn, 1 -> +2, 2 -> -2.
const CLASS: [usize; 4] = [0, 1, 2, 0];
const BLIP: [f64; 3] = [0.0, 2.0, -2.0];

/// Compressed influence functional over M+1 composite time variables.
#[derive(Clone, Debug)]
pub struct InfluenceMps {
    pub mps: Mps,
    pub chi_t: usize,
    pub svd_tol: f64,
    /// Worst per-bond discarded squared weight over the whole construction.
    pub truncation_loss: f64,
}

/// Grows the influence MPS level by level; a snapshot at level k is the
/// complete influence functional for an evolution of k steps.
pub struct InfluenceBuilder {
    dt: f64,
    chi: usize,
    tol: f64,
    /// pair_factors[d][[class, s]] for d = 1..=d_max
    pair_factors: Vec<Array2<Complex64>>,
    self_factor: [Complex64; 4],
    mps: Option<Mps>,
    level: Option<usize>,
    max_disc: f64,
}

impl InfluenceBuilder {
    pub fn new(kernel: &KernelTable, chi_t: usize, svd_tol: f64) -> Result<Self> {
        if chi_t == 0 {
            return Err(CoreError::Config("chi_t must be at least 1".into()));
        }
        if svd_tol < 0.0 {
            return Err(CoreError::Config("svd_tol must be non-negative".into()));
        }
        let dt = kernel.dt();
        let dt2 = dt * dt;
        let cs = kernel.correlations();
        let mut pair_factors = Vec::with_capacity(cs.len());
        for (d, cd) in cs.iter().enumerate() {
            let mut g = Array2::zeros((3, 4));
            for (c, blip) in BLIP.iter().enumerate() {
                for s in 0..4 {
                    let arg = -dt2 * blip * (cd * SIG[s] - cd.conj() * SBR[s]);
                    g[[c, s]] = arg.exp();
                }
            }
            if d > 0 {
                pair_factors.push(g);
            }
        }
        let c0 = cs[0];
        let mut self_factor = [Complex64::new(0.0, 0.0); 4];
        for s in 0..4 {
            self_factor[s] = Complex64::new(dt2 * c0.re * SIG[s] * SBR[s], 0.0).exp();
        }
        Ok(Self {
            dt,
            chi: chi_t,
            tol: svd_tol,
            pair_factors,
            self_factor,
            mps: None,
            level: None,
            max_disc: 0.0,
        })
    }

    /// Topmost grown level, if any.
    pub fn level(&self) -> Option<usize> {
        self.level
    }

    pub fn truncation_loss(&self) -> f64 {
        self.max_disc
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn top_site(&self, channel: bool) -> Array3<Complex64> {
        if channel {
            let mut nt = Array3::zeros((3, 4, 1));
            for a in 0..4 {
                nt[[CLASS[a], a, 0]] = self.self_factor[a];
            }
            nt
        } else {
            let mut nt = Array3::zeros((1, 4, 1));
            for a in 0..4 {
                nt[[0, a, 0]] = self.self_factor[a];
            }
            nt
        }
    }

    /// Adds the next level and re-truncates the affected window.
    pub fn grow(&mut self) -> Result<()> {
        let k = match self.level {
            None => {
                self.level = Some(0);
                self.mps = Some(Mps::new(vec![self.top_site(false)])?);
                return Ok(());
            }
            Some(k) => k + 1,
        };
        self.level = Some(k);
        let d_max = self.pair_factors.len();
        let d_window = k.min(d_max);
        let top = self.top_site(d_window > 0);
        let mps = self.mps.as_mut().expect("grown");
        mps.tensors.push(top);
        if d_window == 0 {
            return Ok(());
        }
        for j in 1..=d_window {
            let i = k - j;
            let a = std::mem::replace(&mut mps.tensors[i], Array3::zeros((1, 1, 1)));
            let (al, _, ar) = a.dim();
            let g = &self.pair_factors[j - 1];
            let through = j < d_window;
            let bl = if through { al * 3 } else { al };
            let mut b = Array3::zeros((bl, 4, ar * 3));
            for c in 0..3 {
                for s in 0..4 {
                    let f = g[[c, s]];
                    for l in 0..al {
                        let row = if through { c * al + l } else { l };
                        for r in 0..ar {
                            b[[row, s, c * ar + r]] = a[[l, s, r]] * f;
                        }
                    }
                }
            }
            mps.tensors[i] = b;
        }
        let lo = k - d_window;
        mps.canonicalize_right(lo)?;
        for i in lo..k {
            let t = std::mem::replace(&mut mps.tensors[i], Array3::zeros((1, 1, 1)));
            let (l, d, r) = t.dim();
            let m = t
                .into_shape_with_order((l * d, r))
                .expect("standard layout");
            let f = svd_trunc(&m, self.chi, self.tol)?;
            self.max_disc = self.max_disc.max(f.discarded);
            let kk = f.s.len();
            mps.tensors[i] = f
                .u
                .into_shape_with_order((l, d, kk))
                .expect("element count preserved");
            let mut carry = f.vt;
            for (mut row, sv) in carry.rows_mut().into_iter().zip(f.s.iter()) {
                row.map_inplace(|z| *z *= *sv);
            }
            let next = std::mem::replace(&mut mps.tensors[i + 1], Array3::zeros((1, 1, 1)));
            let (nl, nd, nr) = next.dim();
            let nm = next
                .into_shape_with_order((nl, nd * nr))
                .expect("standard layout");
            mps.tensors[i + 1] = carry
                .dot(&nm)
                .into_shape_with_order((kk, nd, nr))
                .expect("element count preserved");
        }
        Ok(())
    }

    /// Copy of the current influence MPS.
    pub fn snapshot(&self) -> Result<InfluenceMps> {
        let mps = self
            .mps
            .as_ref()
            .ok_or_else(|| CoreError::Guard("snapshot before first grow".into()))?;
        Ok(InfluenceMps {
            mps: mps.clone(),
            chi_t: self.chi,
            svd_tol: self.tol,
            truncation_loss: self.max_disc,
        })
    }

    /// Final influence MPS, consuming the builder. At the top of a long
    /// grid the tensor train dominates memory; this hands it over without
    /// ever holding two copies.
    pub fn finish(self) -> Result<InfluenceMps> {
        let mps = self
            .mps
            .ok_or_else(|| CoreError::Guard("finish before first grow".into()))?;
        Ok(InfluenceMps {
            mps,
            chi_t: self.chi,
            svd_tol: self.tol,
            truncation_loss: self.max_disc,
        })
    }
}

/// Influence MPS for the full grid (levels 0..=M).
pub fn compress_influence(
    grid: &TimeGrid,
    kernel: &KernelTable,
    chi_t: usize,
    svd_tol: f64,
) -> Result<InfluenceMps> {
    let mut b = InfluenceBuilder::new(kernel, chi_t, svd_tol)?;
    for _ in 0..=grid.m {
        b.grow()?;
    }
    b.snapshot()
}

/// Dense influence tensor over all 4^(M+1) composite configurations,
/// evaluated from the folded pair sum. Small M only.
pub fn build_influence_exact(grid: &TimeGrid, kernel: &KernelTable) -> Result<ArrayD<Complex64>> {
    let m = grid.m;
    if m + 1 > 10 {
        return Err(CoreError::Guard(format!(
            "dense influence needs 4^(M+1) entries; M = {m} exceeds the M+1 <= 10 bound"
        )));
    }
    let n_sites = m + 1;
    let n_points = 2 * m + 2;
    let n_conf = 4usize.pow(n_sites as u32);
    let mut out = ArrayD::zeros(IxDyn(&vec![4; n_sites]));
    let flat = out.as_slice_mut().expect("standard layout");
    let mut conf = vec![0usize; n_sites];
    let mut sigma = vec![0.0f64; n_points];
    for (lin, value) in flat.iter_mut().enumerate().take(n_conf) {
        let mut rem = lin;
        for site in (0..n_sites).rev() {
            conf[site] = rem & 3;
            rem >>= 2;
        }
        for l in 0..n_points {
            let level = grid.level(l);
            sigma[l] = if l <= m { SIG[conf[level]] } else { SBR[conf[level]] };
        }
        let mut expo = Complex64::new(0.0, 0.0);
        for l in 1..n_points {
            for mm in 0..l {
                if kernel.in_window(l, mm) {
                    expo += kernel.coefficient(l, mm)? * sigma[l] * sigma[mm];
                }
            }
        }
        *value = expo.exp();
    }
    Ok(out)
}

/// Elementwise comparison of a compressed influence MPS against the dense
/// tensor: (max relative error, rms relative error).
pub fn reconstruction_error(infl: &InfluenceMps, exact: &ArrayD<Complex64>) -> Result<(f64, f64)> {
    let dense = infl.mps.to_dense()?;
    if dense.shape() != exact.shape() {
        return Err(CoreError::Shape(format!(
            "shape mismatch: {:?} vs {:?}",
            dense.shape(),
            exact.shape()
        )));
    }
    let mut max_rel = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut n = 0usize;
    for (a, b) in dense.iter().zip(exact.iter()) {
        let denom = b.norm();
        if denom == 0.0 {
            return Err(CoreError::Numerical("exact influence entry is zero".into()));
        }
        let rel = (a - b).norm() / denom;
        max_rel = max_rel.max(rel);
        sum_sq += rel * rel;
        n += 1;
    }
    Ok((max_rel, (sum_sq / n as f64).sqrt()))
}
