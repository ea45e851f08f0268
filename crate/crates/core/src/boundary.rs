//! Boundary fixed point of the infinite spatial contraction.
//!
//! Every lattice site contributes the same trace-capped column MPO, so the
//! network is a power of one transfer operator; its dominant eigenvector in
//! MPS form is found by repeated absorption with truncation, iTEBD style.
//! The symmetric splitting of the Ising bond phases makes the column MPO
//! leg-exchange symmetric, hence the left and right eigenvectors coincide
//! and one iteration serves both sides. Observables are ratios of bilinear
//! boundary overlaps, so the dominant eigenvalue and all boundary scale
//! choices cancel.

use crate::column::{Cap, ColumnTensor};
use crate::error::{CoreError, Result};
use crate::mps::{spectra_distance, Mps};
use ndarray::Array3;
use num_complex::Complex64;

/// Which side of the transfer operator a boundary approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Boundary MPS over time levels; physical legs match the column's spatial
/// leg dimensions, kept normalized so the dominant eigenvalue is reported
/// separately.
#[derive(Clone, Debug)]
pub struct BoundaryMps {
    pub mps: Mps,
    pub chi_s: usize,
    pub direction: Side,
}

/// Result of absorbing one column into a boundary.
#[derive(Clone, Debug)]
pub struct Absorption {
    pub boundary: BoundaryMps,
    /// Norm factor removed after the absorption; estimates the dominant
    /// transfer eigenvalue once the iteration has settled.
    pub weight: f64,
    pub worst_discarded: f64,
    pub spectra: Vec<Vec<f64>>,
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

impl BoundaryMps {
    /// Product-state start: ones with a small deterministic jitter so the
    /// iteration cannot get stuck on a symmetry-protected subdominant vector.
    pub fn product(col: &ColumnTensor, chi_s: usize, direction: Side, seed: u64) -> Result<Self> {
        if chi_s == 0 {
            return Err(CoreError::Config("boundary bond dimension must be >= 1".into()));
        }
        let mut state = seed.wrapping_mul(2).wrapping_add(1);
        let tensors = col
            .leg_dims()
            .into_iter()
            .map(|d| {
                let mut t = Array3::from_shape_fn((1, d, 1), |_| {
                    Complex64::new(1.0 + 1e-3 * (splitmix(&mut state) - 0.5), 0.0)
                });
                // Bond dimensions are all 1, so per-site normalization keeps
                // the state normalized and trivially left-canonical: the
                // first absorption weight is then already scale-free.
                let n = t.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                t.mapv_inplace(|c| c / n);
                t
            })
            .collect();
        Ok(Self { mps: Mps { tensors }, chi_s, direction })
    }

    /// Warm start for the next measurement height: reuse a converged lower
    /// boundary and append fresh product sites for the new time levels.
    pub fn padded(&self, col: &ColumnTensor) -> Result<Self> {
        let dims = col.leg_dims();
        if self.mps.len() > dims.len() {
            return Err(CoreError::Shape(format!(
                "boundary spans {} levels but the column only {}",
                self.mps.len(),
                dims.len()
            )));
        }
        let mut mps = self.mps.clone();
        for &d in &dims[self.mps.len()..] {
            let last = mps.tensors.last().expect("non-empty").dim().2;
            if last != 1 {
                return Err(CoreError::Shape(
                    "warm start needs a closed outer bond on the previous boundary".into(),
                ));
            }
            mps.tensors.push(Array3::ones((1, d, 1)));
        }
        Ok(Self { mps, chi_s: self.chi_s, direction: self.direction })
    }

    /// Contracts one capped column into this boundary, truncating to chi_s
    /// with the column's tolerance, and renormalizes.
    pub fn absorb(&self, col: &ColumnTensor, cap: Cap) -> Result<Absorption> {
        let dims = col.leg_dims();
        if self.mps.phys_dims() != dims {
            return Err(CoreError::Shape(format!(
                "boundary physical dimensions {:?} do not match column legs {:?}",
                self.mps.phys_dims(),
                dims
            )));
        }
        let mut mps = self.mps.clone();
        let (worst, spectra) = mps.apply_mpo_with(
            |k| col.mpo_tensor(k, cap),
            self.chi_s,
            col.svd_tol,
        )?;
        // A weight of exactly zero is a legitimate outcome for observable
        // caps (the capped column annihilates the boundary, e.g. <z> = 0 by
        // symmetry); callers that need a nonzero weight check for it.
        let weight = mps.normalize_tail();
        if !weight.is_finite() {
            return Err(CoreError::Numerical(format!(
                "boundary norm degenerated to {weight} during absorption"
            )));
        }
        Ok(Absorption {
            boundary: BoundaryMps { mps, chi_s: self.chi_s, direction: self.direction },
            weight,
            worst_discarded: worst,
            spectra,
        })
    }
}

/// Converged (or abandoned) boundary of the infinite contraction.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    boundary: BoundaryMps,
    pub iterations: usize,
    /// Dominant transfer eigenvalue magnitude from the last absorption.
    pub lambda: f64,
    pub last_distance: f64,
    pub converged: bool,
    pub max_discarded: f64,
}

impl FixedPoint {
    pub fn left(&self) -> &BoundaryMps {
        &self.boundary
    }

    /// The column MPO is leg-exchange symmetric, so the right eigenvector
    /// equals the left one; consistency of independently seeded iterations
    /// is checked by the invariant suite rather than recomputed here.
    pub fn right(&self) -> &BoundaryMps {
        &self.boundary
    }

    pub fn into_boundary(self) -> BoundaryMps {
        self.boundary
    }
}

/// Iterates absorption from `init` until the singular-value spectra of
/// consecutive boundaries agree within conv_tol. Never fails on slow
/// convergence; the flag and last distance let the caller decide.
pub fn itebd_fixed_point_from(
    init: BoundaryMps,
    col: &ColumnTensor,
    conv_tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    if conv_tol <= 0.0 {
        return Err(CoreError::Config(format!(
            "convergence tolerance must be positive, got {conv_tol}"
        )));
    }
    let mut prev = init.mps.schmidt_spectra()?;
    let mut boundary = init;
    let mut lambda = 0.0;
    let mut distance = f64::INFINITY;
    let mut max_disc = 0.0f64;
    for iteration in 1..=max_iter {
        let step = boundary.absorb(col, Cap::Trace)?;
        if step.weight == 0.0 {
            return Err(CoreError::Numerical(
                "trace column annihilated the boundary during iteration".into(),
            ));
        }
        boundary = step.boundary;
        lambda = step.weight;
        max_disc = max_disc.max(step.worst_discarded);
        distance = spectra_distance(&prev, &step.spectra);
        prev = step.spectra;
        if distance < conv_tol {
            return Ok(FixedPoint {
                boundary,
                iterations: iteration,
                lambda,
                last_distance: distance,
                converged: true,
                max_discarded: max_disc,
            });
        }
    }
    Ok(FixedPoint {
        boundary,
        iterations: max_iter,
        lambda,
        last_distance: distance,
        converged: false,
        max_discarded: max_disc,
    })
}

/// Fixed point from a fresh product start with the given jitter seed;
/// errors if max_iter is exhausted.
pub fn itebd_fixed_point_seeded(
    col: &ColumnTensor,
    chi_s: usize,
    conv_tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<FixedPoint> {
    let init = BoundaryMps::product(col, chi_s, Side::Left, seed)?;
    let fp = itebd_fixed_point_from(init, col, conv_tol, max_iter)?;
    if !fp.converged {
        return Err(CoreError::Convergence {
            iterations: fp.iterations,
            last_distance: fp.last_distance,
            tol: conv_tol,
        });
    }
    Ok(fp)
}

/// Default-seeded strict fixed point.
pub fn itebd_fixed_point(
    col: &ColumnTensor,
    chi_s: usize,
    conv_tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    itebd_fixed_point_seeded(col, chi_s, conv_tol, max_iter, 7)
}

/// Local observable selector for the capped-column measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    Sx,
    Zz,
    Identity,
}

/// Per-site transverse moment, per-bond Ising correlator and the
/// normalization diagnostic, sharing absorption work.
#[derive(Clone, Copy, Debug)]
pub struct BulkMeasurement {
    pub sx: f64,
    pub zz: f64,
    pub identity: f64,
}

fn weighted_overlap(b: &BoundaryMps, scale: f64, right: &BoundaryMps) -> Result<Complex64> {
    Ok(b.mps.bilinear_pair(&right.mps)? * scale)
}

/// Two z columns in a row; short-circuits to an exact zero when the first
/// already annihilates the boundary instead of iterating on a zero state.
fn zz_overlap(
    left: &BoundaryMps,
    right: &BoundaryMps,
    col: &ColumnTensor,
) -> Result<Complex64> {
    let z1 = left.absorb(col, Cap::Z)?;
    if z1.weight == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let z2 = z1.boundary.absorb(col, Cap::Z)?;
    weighted_overlap(&z2.boundary, z1.weight * z2.weight, right)
}

fn finite(label: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CoreError::Numerical(format!("{label} contraction returned {value}")))
    }
}

/// Measures sx, zz and the identity in one pass: one and two trace columns
/// fix the normalization, one sx column and two z columns carry the
/// observables. All ratios are independent of boundary scale and of the
/// dominant eigenvalue.
pub fn measure_all(
    left: &BoundaryMps,
    right: &BoundaryMps,
    col: &ColumnTensor,
) -> Result<BulkMeasurement> {
    let v0 = weighted_overlap(left, 1.0, right)?;
    let tr1 = left.absorb(col, Cap::Trace)?;
    let v1 = weighted_overlap(&tr1.boundary, tr1.weight, right)?;
    let tr2 = tr1.boundary.absorb(col, Cap::Trace)?;
    let v2 = weighted_overlap(&tr2.boundary, tr1.weight * tr2.weight, right)?;
    let x = left.absorb(col, Cap::Sx)?;
    let vx = weighted_overlap(&x.boundary, x.weight, right)?;
    let vzz = zz_overlap(left, right, col)?;
    if v1.norm() == 0.0 || v2.norm() == 0.0 {
        return Err(CoreError::Numerical("trace normalization vanished".into()));
    }
    Ok(BulkMeasurement {
        sx: finite("sx", (vx / v1).re)?,
        zz: finite("zz", (vzz / v2).re)?,
        identity: finite("identity", (v2 * v0 / (v1 * v1)).re)?,
    })
}

/// Single observable via the same ratios; sharing across observables is
/// what `measure_all` is for.
pub fn measure_local(
    left: &BoundaryMps,
    right: &BoundaryMps,
    col: &ColumnTensor,
    observable: Observable,
) -> Result<f64> {
    let tr1 = left.absorb(col, Cap::Trace)?;
    let v1 = weighted_overlap(&tr1.boundary, tr1.weight, right)?;
    if v1.norm() == 0.0 {
        return Err(CoreError::Numerical("trace normalization vanished".into()));
    }
    match observable {
        Observable::Sx => {
            let x = left.absorb(col, Cap::Sx)?;
            let vx = weighted_overlap(&x.boundary, x.weight, right)?;
            finite("sx", (vx / v1).re)
        }
        Observable::Zz => {
            let tr2 = tr1.boundary.absorb(col, Cap::Trace)?;
            let v2 = weighted_overlap(&tr2.boundary, tr1.weight * tr2.weight, right)?;
            let vzz = zz_overlap(left, right, col)?;
            if v2.norm() == 0.0 {
                return Err(CoreError::Numerical("trace normalization vanished".into()));
            }
            finite("zz", (vzz / v2).re)
        }
        Observable::Identity => {
            let v0 = weighted_overlap(left, 1.0, right)?;
            let tr2 = tr1.boundary.absorb(col, Cap::Trace)?;
            let v2 = weighted_overlap(&tr2.boundary, tr1.weight * tr2.weight, right)?;
            finite("identity", (v2 * v0 / (v1 * v1)).re)
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sx" => Ok(Observable::Sx),
            "zz" => Ok(Observable::Zz),
            "identity" => Ok(Observable::Identity),
            other => Err(CoreError::Config(format!(
                "unknown observable '{other}' (expected sx, zz or identity)"
            ))),
        }
    }
}
