//! Single-anneal and sweep orchestration.
//!
//! A run grows the influence train once and reuses it across all
//! measurement heights: at each height the column is assembled from a
//! snapshot, the boundary fixed point is warm-started from the previous
//! height's boundary, and the bulk observables are read off. Stage
//! failures after configuration are recorded in the run record instead of
//! propagating, so a partial trajectory is always persisted.

use crate::config::RunConfig;
use anneal_core::{
    build_column, excess_energy, extract_rdm, find_t_star, fit_power_law, itebd_fixed_point_from,
    measure_all, AnnealingSchedule, BathSpec, BoundaryMps, CoreError, InfluenceBuilder,
    KernelTable, Result, ScalingFit, Side, TimeGrid,
};
use serde::Serialize;
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// Absorption iterations allowed per fixed point; generous because slow
/// convergence near the adiabatic end is expected, not pathological.
pub const MAX_FP_ITERATIONS: usize = 500;

/// Temperature scan window for the effective-temperature fit, in units
/// of the bath temperature. Freezing predicts T* between T_B and 2 T_B;
/// the wide bracket lets an off-model state show up as an edge minimum
/// instead of a fake interior one.
pub const T_SCAN_RANGE: (f64, f64) = (0.5, 32.0);

/// Number of chain sites kept in the final-state density matrix.
pub const RDM_SITES: usize = 8;

/// One measured point of the anneal.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub s: f64,
    /// Bulk energy density -A(s)<sx> - B(s)<zz>.
    pub energy: f64,
    pub sx: f64,
    pub zz: f64,
}

/// Fixed-point diagnostics for one measurement height.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceRow {
    pub s: f64,
    pub iterations: usize,
    pub last_distance: f64,
    pub max_discarded: f64,
    pub influence_loss: f64,
}

/// Quality of the extracted final-state density matrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RdmDiagnostics {
    pub eps_pos: f64,
    pub hermiticity: f64,
    /// Eigenvalue mass clipped in the relative-entropy evaluation at T*.
    pub clipped_mass: f64,
    pub trusted: bool,
}

/// Stage-labelled failure; the record stays valid and partial.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

/// Self-describing artifact of one run: the exact configuration, the
/// trajectory, convergence logs and the scaling observables.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    /// Config snapshot in the flat key=value format; re-runnable as-is.
    pub config: String,
    pub trajectory: Vec<TrajectoryPoint>,
    pub convergence: Vec<ConvergenceRow>,
    pub rdm: Option<RdmDiagnostics>,
    pub e_exc: Option<f64>,
    pub t_star: Option<f64>,
    pub s_star_empirical: Option<f64>,
    /// Relative entropy vs Gibbs-window temperature, sorted in T.
    pub kl_curve: Vec<(f64, f64)>,
    pub t_star_at_boundary: bool,
    pub failure: Option<Failure>,
    pub wall_seconds: f64,
    pub code_version: String,
}

impl RunRecord {
    fn fresh(cfg: &RunConfig) -> Self {
        RunRecord {
            config: cfg.snapshot(),
            trajectory: Vec::new(),
            convergence: Vec::new(),
            rdm: None,
            e_exc: None,
            t_star: None,
            s_star_empirical: None,
            kl_curve: Vec::new(),
            t_star_at_boundary: false,
            failure: None,
            wall_seconds: 0.0,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn fail(&mut self, stage: &str, err: CoreError) {
        self.failure = Some(Failure { stage: stage.to_string(), message: err.to_string() });
    }
}

/// Measurement heights: `points` evenly spaced schedule fractions, snapped
/// to grid steps and deduplicated (coarse grids can collapse neighbours).
/// The final step M is always included.
pub fn measurement_heights(m: usize, points: usize) -> Vec<usize> {
    let mut heights = BTreeSet::new();
    for j in 1..=points {
        let h = (j as f64 * m as f64 / points as f64).round() as usize;
        heights.insert(h.clamp(1, m));
    }
    heights.into_iter().collect()
}

/// Full pipeline for one anneal. Configuration problems are errors before
/// any compute; later stage failures come back inside the record together
/// with everything measured up to that point.
pub fn run_anneal(cfg: &RunConfig) -> Result<RunRecord> {
    let m = cfg.validate()?;
    let grid = TimeGrid::new(cfg.t_a, cfg.dt, cfg.tau_c)?;
    let sched = AnnealingSchedule::new(cfg.alpha)?;
    let bath = BathSpec::new(cfg.eta, cfg.omega_c, cfg.t_b)?;

    let clock = Instant::now();
    let mut record = RunRecord::fresh(cfg);
    let heights = measurement_heights(m, cfg.measure_points);

    let kernel = match KernelTable::build(&grid, &bath) {
        Ok(k) => k,
        Err(e) => {
            record.fail("kernel", e);
            record.wall_seconds = clock.elapsed().as_secs_f64();
            return Ok(record);
        }
    };
    let mut builder = match InfluenceBuilder::new(&kernel, cfg.chi_t, cfg.svd_tol) {
        Ok(b) => Some(b),
        Err(e) => {
            record.fail("influence", e);
            record.wall_seconds = clock.elapsed().as_secs_f64();
            return Ok(record);
        }
    };
    drop(kernel);

    let mut boundary: Option<BoundaryMps> = None;
    let mut final_state: Option<(BoundaryMps, anneal_core::ColumnTensor, f64)> = None;

    for (idx, &h) in heights.iter().enumerate() {
        let s = h as f64 / m as f64;
        let stage_s = format!(" at s = {s}");

        let infl = {
            let b = builder.as_mut().expect("builder present until the last height");
            let grown = (|| -> Result<()> {
                while b.level().map_or(true, |l| l < h) {
                    b.grow()?;
                }
                Ok(())
            })();
            if let Err(e) = grown {
                record.fail(&format!("influence{stage_s}"), e);
                break;
            }
            let last = idx + 1 == heights.len();
            let snap = if last {
                builder.take().expect("checked above").finish()
            } else {
                b.snapshot()
            };
            match snap {
                Ok(i) => i,
                Err(e) => {
                    record.fail(&format!("influence{stage_s}"), e);
                    break;
                }
            }
        };
        let influence_loss = infl.truncation_loss;

        let col = match build_column(&infl, &grid, &sched, h) {
            Ok(c) => c,
            Err(e) => {
                record.fail(&format!("column{stage_s}"), e);
                break;
            }
        };
        drop(infl);

        let init = match &boundary {
            Some(prev) => prev.padded(&col),
            None => BoundaryMps::product(&col, cfg.chi_s, Side::Left, 7),
        };
        let init = match init {
            Ok(b) => b,
            Err(e) => {
                record.fail(&format!("fixed point{stage_s}"), e);
                break;
            }
        };
        let fp = match itebd_fixed_point_from(init, &col, cfg.conv_tol, MAX_FP_ITERATIONS) {
            Ok(fp) => fp,
            Err(e) => {
                record.fail(&format!("fixed point{stage_s}"), e);
                break;
            }
        };
        if !fp.converged {
            record.fail(
                &format!("fixed point{stage_s}"),
                CoreError::Convergence {
                    iterations: fp.iterations,
                    last_distance: fp.last_distance,
                    tol: cfg.conv_tol,
                },
            );
            break;
        }
        record.convergence.push(ConvergenceRow {
            s,
            iterations: fp.iterations,
            last_distance: fp.last_distance,
            max_discarded: fp.max_discarded,
            influence_loss,
        });

        let meas = match measure_all(fp.left(), fp.right(), &col) {
            Ok(v) => v,
            Err(e) => {
                record.fail(&format!("measurement{stage_s}"), e);
                break;
            }
        };
        let (a, b) = sched.eval(s)?;
        let energy = -a * meas.sx - b * meas.zz;
        record.trajectory.push(TrajectoryPoint { s, energy, sx: meas.sx, zz: meas.zz });

        let bnd = fp.into_boundary();
        if idx + 1 == heights.len() {
            final_state = Some((bnd, col, energy));
        } else {
            boundary = Some(bnd);
        }
    }

    if let Some((bnd, col, e_final)) = final_state {
        match excess_energy(e_final, cfg.t_b) {
            Ok(v) => record.e_exc = Some(v),
            Err(e) => record.fail("scaling", e),
        }
        match extract_rdm(&bnd, &bnd, &col, RDM_SITES) {
            Ok(rho) => {
                let scan = (T_SCAN_RANGE.0 * cfg.t_b, T_SCAN_RANGE.1 * cfg.t_b);
                match find_t_star(&rho, scan) {
                    Ok(curve) => {
                        let kl_at_star = anneal_core::kl_divergence(&rho, curve.t_star)
                            .map(|v| v.clipped_mass)
                            .unwrap_or(f64::NAN);
                        record.rdm = Some(RdmDiagnostics {
                            eps_pos: rho.eps_pos,
                            hermiticity: rho.hermiticity,
                            clipped_mass: kl_at_star,
                            trusted: rho.trusted,
                        });
                        record.t_star = Some(curve.t_star);
                        record.s_star_empirical = Some(cfg.t_b / curve.t_star);
                        record.t_star_at_boundary = curve.at_boundary;
                        record.kl_curve = curve.samples;
                        record.kl_curve.sort_by(|x, y| x.0.total_cmp(&y.0));
                    }
                    Err(e) => record.fail("effective temperature", e),
                }
            }
            Err(e) => record.fail("rdm", e),
        }
    }

    record.wall_seconds = clock.elapsed().as_secs_f64();
    Ok(record)
}

/// Sweep axis selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    TA,
    Eta,
    Alpha,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::TA => "t_a",
            SweepAxis::Eta => "eta",
            SweepAxis::Alpha => "alpha",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t_a" => Ok(SweepAxis::TA),
            "eta" => Ok(SweepAxis::Eta),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(CoreError::Config(format!(
                "sweep axis must be t_a|eta|alpha, got {other:?}"
            ))),
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::TA => cfg.t_a = value,
            SweepAxis::Eta => cfg.eta = value,
            SweepAxis::Alpha => cfg.alpha = value,
        }
    }
}

/// One sweep result: the axis value, its full record, and the output
/// directory the record was asked to persist under.
#[derive(Debug)]
pub struct SweepEntry {
    pub value: f64,
    pub record: RunRecord,
    pub dir: std::path::PathBuf,
}

/// Outcome of a sweep: per-value records in input order plus the
/// automatic power-law fit for duration sweeps (when enough runs
/// produced a positive excess energy).
#[derive(Debug)]
pub struct SweepOutcome {
    pub axis: SweepAxis,
    pub entries: Vec<SweepEntry>,
    pub fit: Option<ScalingFit>,
}

impl SweepOutcome {
    pub fn n_failed(&self) -> usize {
        self.entries.iter().filter(|e| e.record.failure.is_some()).count()
    }
}

/// Runs one configuration per axis value on a small worker pool. A failed
/// run is marked in its own record and never disturbs the others; records
/// are persisted to one subdirectory per value as they finish.
pub fn run_sweep(
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
) -> Result<SweepOutcome> {
    if values.len() < 2 {
        return Err(CoreError::Config(format!(
            "a sweep needs at least 2 axis values, got {}",
            values.len()
        )));
    }
    let jobs = jobs.max(1).min(values.len());
    let slots: Vec<Mutex<Option<SweepEntry>>> =
        values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= values.len() {
                    break;
                }
                let value = values[i];
                let mut cfg = base.clone();
                axis.apply(&mut cfg, value);
                let dir = base.outputs.join(format!("{}={}", axis.as_str(), value));
                cfg.outputs = dir.clone();
                let mut record = match run_anneal(&cfg) {
                    Ok(r) => r,
                    Err(e) => {
                        let mut r = RunRecord::fresh(&cfg);
                        r.fail("config", e);
                        r
                    }
                };
                if let Err(e) = crate::emit::persist_record(&dir, &record) {
                    if record.failure.is_none() {
                        record.fail("persist", e);
                    }
                }
                *slots[i].lock().unwrap() = Some(SweepEntry { value, record, dir });
            });
        }
    });

    let entries: Vec<SweepEntry> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot filled by the pool"))
        .collect();

    let fit = if axis == SweepAxis::TA {
        let points: Vec<(f64, f64)> = entries
            .iter()
            .filter_map(|e| e.record.e_exc.map(|x| (e.value, x)))
            .collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        fit_power_law(&points, (lo, hi)).ok()
    } else {
        None
    };

    Ok(SweepOutcome { axis, entries, fit })
}
