//! Quasistatic freezing theory and the analysis estimators built on it.
//!
//! The relaxation time of the ordered phase grows as C/eta * (1-s)^(-2a);
//! once its rate of change outpaces the drive the state stops following the
//! instantaneous equilibrium. The closed-form freezing point, the predicted
//! excess-energy exponent and the effective temperature all follow from that
//! single crossing condition. The estimators (excess energy, KL divergence
//! against a classical Gibbs window, power-law fits) quantify how closely a
//! simulated trajectory obeys the theory.

use ndarray::Array1;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{CoreError, Result};
use crate::oracles::classical_chain_energy;
use crate::rdm::ReducedDensityMatrix;

/// Relaxation-time model tau_rel(s) = C/eta * (1-s)^(-2*alpha) together
/// with the anneal duration it competes against.
#[derive(Clone, Copy, Debug)]
pub struct FreezingModel {
    pub alpha: f64,
    pub eta: f64,
    /// Relaxation-time prefactor; unknown microscopically, defaults to 1 and
    /// cancels from every exponent comparison.
    pub c: f64,
    pub t_a: f64,
}

impl FreezingModel {
    pub fn new(alpha: f64, eta: f64, c: f64, t_a: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("eta", eta), ("c", c), ("t_a", t_a)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { alpha, eta, c, t_a })
    }

    /// Model with the conventional prefactor C = 1.
    pub fn unit(alpha: f64, eta: f64, t_a: f64) -> Result<Self> {
        Self::new(alpha, eta, 1.0, t_a)
    }
}

/// Outcome of the crossing condition d(tau_rel)/dt = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Freezing {
    /// Freezes at s_star in [0,1); zero means frozen from the start.
    At { s_star: f64 },
    /// The relaxation rate never falls behind the drive within the anneal;
    /// carries the (>1) crossing argument for diagnostics.
    Never { arg: f64 },
}

/// Closed-form solution of d(tau_rel)/dt = 1 with t = s * t_a:
/// 1 - s_star = (2 alpha C / (eta t_a))^(1/(2 alpha + 1)).
pub fn freezing_point(model: &FreezingModel) -> Freezing {
    let arg = 2.0 * model.alpha * model.c / (model.eta * model.t_a);
    if arg > 1.0 {
        Freezing::Never { arg }
    } else {
        let s_star = 1.0 - arg.powf(1.0 / (2.0 * model.alpha + 1.0));
        Freezing::At { s_star }
    }
}

/// Predicted excess-energy decay exponent b = min(1, 2*alpha)/(2*alpha + 1);
/// largest (1/2) exactly at alpha = 1/2.
pub fn predicted_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CoreError::Config(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok((2.0 * alpha).min(1.0) / (2.0 * alpha + 1.0))
}

/// The frozen state keeps the bath temperature relative to the coupling at
/// the freezing point, so on the full-coupling scale it looks hotter:
/// T_star = T_B / s_star.
pub fn effective_temperature(s_star: f64, t_b: f64) -> Result<f64> {
    if !(s_star > 0.0 && s_star <= 1.0) {
        return Err(CoreError::Config(format!(
            "s_star must lie in (0, 1], got {s_star}"
        )));
    }
    if !(t_b > 0.0) {
        return Err(CoreError::Config(format!(
            "bath temperature must be positive, got {t_b}"
        )));
    }
    Ok(t_b / s_star)
}

/// Final energy per spin above the classical-chain equilibrium value at the
/// bath temperature.
pub fn excess_energy(e_final_per_spin: f64, t_b: f64) -> Result<f64> {
    Ok(e_final_per_spin - classical_chain_energy(1.0, t_b)?)
}

/// Energy-per-spin line of a state frozen with effective temperature
/// t_star, as a function of the schedule parameter s: the bond moment stays
/// put while the coupling keeps ramping, so the curve is linear in s.
pub fn frozen_energy_line(s: f64, t_star: f64) -> Result<f64> {
    Ok(s * classical_chain_energy(1.0, t_star)?)
}

/// Diagonal of the n-site window marginal of the infinite classical-chain
/// Gibbs state: p(conf) = exp[(1/T) * sum_i sigma_i sigma_{i+1}] / Z with
/// Z = 2 (2 cosh(1/T))^(n-1). The uniform dominant eigenvector of the
/// transfer matrix makes the free-boundary window marginal exact. Bit
/// convention matches the density matrices: bit 0 is spin up, leftmost site
/// most significant.
pub fn gibbs_window_distribution(n: usize, t: f64) -> Result<Array1<f64>> {
    if n == 0 || n > 16 {
        return Err(CoreError::Config(format!(
            "window size must be 1..=16, got {n}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(CoreError::Config(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    let k = 1.0 / t;
    let bonds = n - 1;
    let z = 2.0 * (2.0 * k.cosh()).powi(bonds as i32);
    let mask = (1usize << bonds).saturating_sub(1);
    let mut p = Array1::zeros(1 << n);
    for conf in 0..1usize << n {
        let flips = ((conf ^ (conf >> 1)) & mask).count_ones() as i32;
        let align = bonds as i32 - 2 * flips;
        p[conf] = (k * align as f64).exp() / z;
    }
    Ok(p)
}

/// One evaluation of the relative entropy D(rho || gibbs(T)).
#[derive(Clone, Copy, Debug)]
pub struct KlValue {
    pub d: f64,
    /// Probability mass added by clipping eigenvalues below the floor.
    pub clipped_mass: f64,
    pub trusted: bool,
}

/// Eigenvalue floor for matrix logarithms.
pub const KL_CLIP: f64 = 1e-12;

/// Clipped mass beyond which a divergence is reported but not trusted.
pub const KL_TRUST_MASS: f64 = 1e-3;

/// Relative entropy of an n-site state against the classical Gibbs window
/// at temperature t. The reference is diagonal in the z basis, so only the
/// state itself needs an eigendecomposition. Tiny truncation-induced
/// negativities are clipped at a floor and the clipped mass reported; a
/// result more negative than -1e-10 is an error, smaller ones clamp to 0.
pub fn kl_divergence(rho: &ReducedDensityMatrix, t: f64) -> Result<KlValue> {
    let p = gibbs_window_distribution(rho.n_sites, t)?;
    let dim = rho.dim();
    let (vals, _) = rho
        .data
        .eigh(UPLO::Lower)
        .map_err(|e| CoreError::Numerical(format!("eigendecomposition failed: {e}")))?;
    let mut clipped_mass = 0.0f64;
    let mut lam: Vec<f64> = vals
        .iter()
        .map(|&v| {
            let c = v.max(KL_CLIP);
            clipped_mass += c - v;
            c
        })
        .collect();
    let total: f64 = lam.iter().sum();
    for v in &mut lam {
        *v /= total;
    }
    let s_rho: f64 = lam.iter().map(|&v| v * v.ln()).sum();
    let mut cross = 0.0f64;
    for i in 0..dim {
        cross += rho.data[[i, i]].re * p[i].ln();
    }
    let d = s_rho - cross;
    if d < -1e-10 {
        return Err(CoreError::Numerical(format!(
            "relative entropy came out {d}, beyond numerical slack"
        )));
    }
    Ok(KlValue {
        d: d.max(0.0),
        clipped_mass,
        trusted: clipped_mass <= KL_TRUST_MASS,
    })
}

/// Divergence-vs-temperature scan with its minimizer.
#[derive(Clone, Debug)]
pub struct KlCurve {
    pub samples: Vec<(f64, f64)>,
    pub t_star: f64,
    pub d_min: f64,
    /// Minimum sits on the scan edge; the true minimizer may lie outside.
    pub at_boundary: bool,
    pub trusted: bool,
}

/// Coarse scan resolution of the temperature range.
pub const KL_SCAN_POINTS: usize = 64;

/// Locates the temperature whose Gibbs window is closest to the state:
/// coarse log-spaced scan, then golden-section refinement (in log T) to a
/// relative width of 1e-4. An edge minimum is flagged instead of refined.
pub fn find_t_star(rho: &ReducedDensityMatrix, t_range: (f64, f64)) -> Result<KlCurve> {
    let (lo, hi) = t_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(CoreError::Config(format!(
            "temperature range must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let ratio = hi / lo;
    let mut samples = Vec::with_capacity(KL_SCAN_POINTS + 1);
    let mut trusted = true;
    for j in 0..KL_SCAN_POINTS {
        let t = lo * ratio.powf(j as f64 / (KL_SCAN_POINTS - 1) as f64);
        let v = kl_divergence(rho, t)?;
        trusted &= v.trusted;
        samples.push((t, v.d));
    }
    let mut best = 0usize;
    for (j, s) in samples.iter().enumerate() {
        if s.1 < samples[best].1 {
            best = j;
        }
    }
    if best == 0 || best == KL_SCAN_POINTS - 1 {
        let (t_star, d_min) = samples[best];
        return Ok(KlCurve { samples, t_star, d_min, at_boundary: true, trusted });
    }

    // golden section on x = ln T inside the bracketing neighbours
    let mut a = samples[best - 1].0.ln();
    let mut b = samples[best + 1].0.ln();
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let eval = |x: f64| -> Result<f64> { Ok(kl_divergence(rho, x.exp())?.d) };
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > 1e-4 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let t_star = x.exp();
    let v = kl_divergence(rho, t_star)?;
    trusted &= v.trusted;
    samples.push((t_star, v.d));
    Ok(KlCurve { samples, t_star, d_min: v.d, at_boundary: false, trusted })
}

/// Power-law fit E = a * t^(-b) on log-log axes.
#[derive(Clone, Copy, Debug)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub stderr_b: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// Points inside the window dropped for being non-positive.
    pub n_excluded: usize,
}

/// Least squares on (ln t, ln E) over the points inside the window.
/// Non-positive values cannot enter a log fit and are counted out; fewer
/// than 3 surviving points is an error.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<ScalingFit> {
    let (w_lo, w_hi) = window;
    if !(w_lo > 0.0 && w_hi > w_lo) {
        return Err(CoreError::Config(format!(
            "fit window must satisfy 0 < lo < hi, got ({w_lo}, {w_hi})"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut n_excluded = 0usize;
    for &(t, e) in points {
        if t < w_lo || t > w_hi {
            continue;
        }
        if e <= 0.0 || !e.is_finite() || !t.is_finite() {
            n_excluded += 1;
            continue;
        }
        xs.push(t.ln());
        ys.push(e.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(CoreError::Config(format!(
            "power-law fit needs at least 3 positive points in the window, found {n}"
        )));
    }
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(CoreError::Config(
            "power-law fit needs at least two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr_b = if n > 2 { (ss_res / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ScalingFit {
        a: intercept.exp(),
        b: -slope,
        stderr_b,
        window,
        n_points: n,
        n_excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use num_complex::Complex64;

    fn gibbs_rdm(n: usize, t: f64) -> ReducedDensityMatrix {
        let p = gibbs_window_distribution(n, t).unwrap();
        let dim = 1 << n;
        let mut data = Array2::zeros((dim, dim));
        for i in 0..dim {
            data[[i, i]] = Complex64::new(p[i], 0.0);
        }
        ReducedDensityMatrix {
            n_sites: n,
            data,
            trace_norm_applied: true,
            hermiticity: 0.0,
            eps_pos: 0.0,
            trusted: true,
        }
    }

    #[test]
    fn exponent_peaks_at_one_half() {
        assert_eq!(predicted_exponent(1.0).unwrap(), 1.0 / 3.0);
        assert_eq!(predicted_exponent(0.5).unwrap(), 0.5);
        assert_eq!(predicted_exponent(0.25).unwrap(), 1.0 / 3.0);
        assert_eq!(predicted_exponent(2.0).unwrap(), 0.2);
        let left = predicted_exponent(0.5 - 1e-9).unwrap();
        let right = predicted_exponent(0.5 + 1e-9).unwrap();
        assert!((left - right).abs() < 1e-8);
        for i in 1..400 {
            let alpha = i as f64 * 0.01;
            let b = predicted_exponent(alpha).unwrap();
            assert!(b <= 0.5 + 1e-15);
            if (alpha - 0.5).abs() > 1e-9 {
                assert!(b < 0.5);
            }
        }
        assert!(predicted_exponent(0.0).is_err());
        assert!(predicted_exponent(-1.0).is_err());
    }

    #[test]
    fn freezing_point_matches_closed_form() {
        let at = |eta_ta: f64, alpha: f64| {
            freezing_point(&FreezingModel::unit(alpha, eta_ta, 1.0).unwrap())
        };
        match at(2.0, 1.0) {
            Freezing::At { s_star } => assert_eq!(s_star, 0.0),
            other => panic!("expected threshold freeze, got {other:?}"),
        }
        match at(2000.0, 1.0) {
            Freezing::At { s_star } => assert!((1.0 - s_star - 0.1).abs() < 1e-12),
            other => panic!("expected freeze, got {other:?}"),
        }
        match at(1.0, 1.0) {
            Freezing::Never { arg } => assert!((arg - 2.0).abs() < 1e-15),
            other => panic!("expected no freeze, got {other:?}"),
        }
        // homogeneity: scaling eta*t_a by 8 rescales 1-s_star by 8^(-1/(2a+1))
        for alpha in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let f1 = at(100.0, alpha);
            let f8 = at(800.0, alpha);
            if let (Freezing::At { s_star: s1 }, Freezing::At { s_star: s8 }) = (f1, f8) {
                let expect = 8.0f64.powf(-1.0 / (2.0 * alpha + 1.0));
                assert!(((1.0 - s8) / (1.0 - s1) - expect).abs() < 1e-12);
            } else {
                panic!("unexpected no-freeze at alpha {alpha}");
            }
        }
    }

    #[test]
    fn freezing_slope_follows_the_predicted_exponent() {
        for alpha in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let pts: Vec<(f64, f64)> = (0..12)
                .map(|i| {
                    let t_a = 50.0 * 1.5f64.powi(i);
                    match freezing_point(&FreezingModel::unit(alpha, 0.18, t_a).unwrap()) {
                        Freezing::At { s_star } => (t_a, 1.0 - s_star),
                        Freezing::Never { .. } => panic!("no freeze at t_a {t_a}"),
                    }
                })
                .collect();
            let fit = fit_power_law(&pts, (1.0, 1e9)).unwrap();
            let expect = 1.0 / (2.0 * alpha + 1.0);
            assert!(
                (fit.b - expect).abs() < 1e-9,
                "alpha {alpha}: slope {} vs {expect}",
                fit.b
            );
            assert!(fit.stderr_b < 1e-9);
        }
    }

    #[test]
    fn effective_temperature_and_energy_anchors() {
        assert_eq!(effective_temperature(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(effective_temperature(0.5, 1.0).unwrap(), 2.0);
        assert!(effective_temperature(0.0, 1.0).is_err());
        assert!(effective_temperature(0.5, -1.0).is_err());
        let e_eq = -(1.0f64.tanh());
        assert!(excess_energy(e_eq, 1.0).unwrap().abs() < 1e-15);
        assert!((excess_energy(-0.70, 1.0).unwrap() - (e_eq.abs() - 0.70)).abs() < 1e-12);
        // reconstruction is exact
        let e = -0.83;
        let exc = excess_energy(e, 1.0).unwrap();
        assert_eq!(exc + classical_chain_energy(1.0, 1.0).unwrap(), e);
        // frozen line: slope equals the classical bond energy at T_star
        let t_star = 1.7;
        let slope = frozen_energy_line(1.0, t_star).unwrap();
        assert!((slope - classical_chain_energy(1.0, t_star).unwrap()).abs() < 1e-15);
        assert!((frozen_energy_line(0.5, t_star).unwrap() - 0.5 * slope).abs() < 1e-15);
    }

    #[test]
    fn gibbs_window_is_a_normalized_transfer_marginal() {
        for (n, t) in [(3usize, 0.7), (8, 1.5)] {
            let p = gibbs_window_distribution(n, t).unwrap();
            assert!((p.sum() - 1.0).abs() < 1e-12);
            // independent enumeration with its own normalization
            let k = 1.0 / t;
            let mut w = vec![0.0f64; 1 << n];
            for conf in 0..1usize << n {
                let mut s = 0.0;
                for i in 0..n - 1 {
                    let zi = 1.0 - 2.0 * ((conf >> (n - 1 - i)) & 1) as f64;
                    let zj = 1.0 - 2.0 * ((conf >> (n - 2 - i)) & 1) as f64;
                    s += zi * zj;
                }
                w[conf] = (k * s).exp();
            }
            let z: f64 = w.iter().sum();
            assert!((z - 2.0 * (2.0 * k.cosh()).powi(n as i32 - 1)).abs() / z < 1e-12);
            for conf in 0..1usize << n {
                assert!((p[conf] - w[conf] / z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn relative_entropy_basics() {
        let rho = gibbs_rdm(8, 1.5);
        let self_d = kl_divergence(&rho, 1.5).unwrap();
        assert!(self_d.d <= 1e-10, "{}", self_d.d);
        assert!(self_d.trusted);
        // positivity away from the minimum
        for t in [0.6, 1.0, 2.5, 4.0] {
            let v = kl_divergence(&rho, t).unwrap();
            assert!(v.d > 0.0, "T={t}: {}", v.d);
        }
        // maximally mixed state against a nearly infinite temperature
        let dim = 256;
        let mut data = Array2::zeros((dim, dim));
        for i in 0..dim {
            data[[i, i]] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        let mixed = ReducedDensityMatrix {
            n_sites: 8,
            data,
            trace_norm_applied: true,
            hermiticity: 0.0,
            eps_pos: 0.0,
            trusted: true,
        };
        let v = kl_divergence(&mixed, 1e9).unwrap();
        assert!(v.d < 1e-6, "{}", v.d);
    }

    #[test]
    fn temperature_scan_recovers_the_source() {
        let rho = gibbs_rdm(8, 2.0);
        let curve = find_t_star(&rho, (1.0, 4.0)).unwrap();
        assert!(!curve.at_boundary);
        assert!(curve.trusted);
        assert!((curve.t_star - 2.0).abs() < 1e-3, "{}", curve.t_star);
        assert!(curve.d_min < 1e-10);
        let attained = curve
            .samples
            .iter()
            .fold(f64::INFINITY, |acc, s| acc.min(s.1));
        assert!(curve.d_min <= attained + 1e-15);
        // source outside the range pins the minimum to the edge
        let edge = find_t_star(&rho, (3.0, 9.0)).unwrap();
        assert!(edge.at_boundary);
        assert!((edge.t_star - 3.0).abs() < 1e-12);
        assert!(find_t_star(&rho, (0.0, 1.0)).is_err());
    }

    #[test]
    fn power_law_fit_and_its_invariances() {
        let exact: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let t = 100.0 * 2.0f64.powi(i);
                (t, 2.0 * t.powf(-1.0 / 3.0))
            })
            .collect();
        let fit = fit_power_law(&exact, (50.0, 1e4)).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-10);
        assert!((fit.b - 1.0 / 3.0).abs() < 1e-12);
        assert!(fit.stderr_b < 1e-12);
        assert_eq!(fit.n_points, 6);
        assert_eq!(fit.n_excluded, 0);
        // rescaling the abscissa leaves b alone and scales a by c^b
        let c = 7.3;
        let scaled: Vec<(f64, f64)> = exact.iter().map(|&(t, e)| (c * t, e)).collect();
        let fs = fit_power_law(&scaled, (50.0 * c, 1e4 * c)).unwrap();
        assert!((fs.b - fit.b).abs() < 1e-9);
        assert!((fs.a / (fit.a * c.powf(fit.b)) - 1.0).abs() < 1e-9);
        // multiplicative noise: recovered exponent within 3 standard errors
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let noisy: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let t = 100.0 * 1.9f64.powi(i);
                let e = 2.0 * t.powf(-1.0 / 3.0) * (1.0 + 0.01 * (2.0 * unit() - 1.0));
                (t, e)
            })
            .collect();
        let fn_ = fit_power_law(&noisy, (50.0, 1e6)).unwrap();
        assert!(fn_.stderr_b > 0.0);
        assert!((fn_.b - 1.0 / 3.0).abs() < 3.0 * fn_.stderr_b + 1e-2);
        // exclusion and failure paths
        let mut with_bad = exact.clone();
        with_bad.push((300.0, -1.0));
        let fb = fit_power_law(&with_bad, (50.0, 1e4)).unwrap();
        assert_eq!(fb.n_excluded, 1);
        assert!(fit_power_law(&exact, (1e6, 1e7)).is_err());
        assert!(fit_power_law(&exact[..2], (50.0, 1e4)).is_err());
    }
}
