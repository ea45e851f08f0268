//! Exact statevector evolution of small open chains under the same Trotter
//! splitting the tensor-network engine uses, plus a power-iteration ground
//! state for the periodic chain. Basis: bit i of a configuration selects
//! site i, bit value 0 means z = +1.

use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::schedule::{AnnealingSchedule, ScheduleSampling};
use ndarray::Array2;
use num_complex::Complex64;

const MAX_SITES: usize = 12;

/// Bulk observables of one trajectory point.
#[derive(Clone, Copy, Debug)]
pub struct EdSample {
    /// Schedule position l/M at which the point is reported.
    pub s: f64,
    /// <sigma^x> at the central site n/2.
    pub sx: f64,
    /// <z z> on the central bond (n/2 - 1, n/2).
    pub zz: f64,
    /// Instantaneous bulk energy density -A(s) sx - B(s) zz.
    pub energy: f64,
}

struct Chain {
    n: usize,
    psi: Vec<Complex64>,
}

impl Chain {
    fn new(n: usize) -> Result<Self> {
        if n < 2 || n > MAX_SITES || n % 2 != 0 {
            return Err(CoreError::Guard(format!(
                "statevector oracle needs even 2 <= n <= {MAX_SITES}, got {n}"
            )));
        }
        let amp = Complex64::new((1.0 / (1usize << n) as f64).sqrt(), 0.0);
        Ok(Self { n, psi: vec![amp; 1 << n] })
    }

    /// exp(+i a dt sigma_x) on every site.
    fn rotate_fields(&mut self, a: f64, dt: f64) {
        let c = Complex64::new((a * dt).cos(), 0.0);
        let s = Complex64::new(0.0, (a * dt).sin());
        for i in 0..self.n {
            let bit = 1usize << i;
            for conf in 0..self.psi.len() {
                if conf & bit == 0 {
                    let lo = self.psi[conf];
                    let hi = self.psi[conf | bit];
                    self.psi[conf] = c * lo + s * hi;
                    self.psi[conf | bit] = s * lo + c * hi;
                }
            }
        }
    }

    /// exp(+i b dt z_i z_{i+1}) on every open-chain bond, diagonal.
    fn apply_bond_phases(&mut self, b: f64, dt: f64) {
        for (conf, amp) in self.psi.iter_mut().enumerate() {
            // adjacent equal bits align; n-1 bonds minus 2*(misaligned)
            let flips = (conf ^ (conf >> 1)) & ((1 << (self.n - 1)) - 1);
            let zz_sum = (self.n - 1) as f64 - 2.0 * flips.count_ones() as f64;
            *amp *= Complex64::new(0.0, b * dt * zz_sum).exp();
        }
    }

    fn z_of(conf: usize, site: usize) -> f64 {
        1.0 - 2.0 * ((conf >> site) & 1) as f64
    }

    fn sx_at(&self, site: usize) -> f64 {
        let bit = 1usize << site;
        self.psi
            .iter()
            .enumerate()
            .map(|(conf, amp)| (amp.conj() * self.psi[conf ^ bit]).re)
            .sum()
    }

    fn zz_at(&self, left: usize) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(conf, amp)| {
                amp.norm_sqr() * Self::z_of(conf, left) * Self::z_of(conf, left + 1)
            })
            .sum()
    }

    #[cfg(test)]
    fn norm(&self) -> f64 {
        self.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Runs the annealed Trotter circuit on an n-site open chain starting from
/// all spins along +x and returns bulk observables after 0..=M steps, the
/// point after step l labeled s = l/M.
pub fn ed_trotter_evolve_sampled(
    n: usize,
    sched: &AnnealingSchedule,
    grid: &TimeGrid,
    sampling: ScheduleSampling,
) -> Result<Vec<EdSample>> {
    let mut chain = Chain::new(n)?;
    let site = n / 2;
    let mut out = Vec::with_capacity(grid.m + 1);
    for step in 0..=grid.m {
        if step > 0 {
            let (a, b) = sched.eval(sampling.fraction(step - 1, grid.m))?;
            chain.rotate_fields(a, grid.dt);
            chain.apply_bond_phases(b, grid.dt);
        }
        let s = step as f64 / grid.m as f64;
        let (a_s, b_s) = sched.eval(s)?;
        let sx = chain.sx_at(site);
        let zz = chain.zz_at(site - 1);
        out.push(EdSample { s, sx, zz, energy: -a_s * sx - b_s * zz });
    }
    Ok(out)
}

/// Same with the default midpoint schedule sampling.
pub fn ed_trotter_evolve(
    n: usize,
    sched: &AnnealingSchedule,
    grid: &TimeGrid,
) -> Result<Vec<EdSample>> {
    ed_trotter_evolve_sampled(n, sched, grid, ScheduleSampling::Midpoint)
}

/// Reduced density matrix of the k central sites (k <= 3) after `upto_step`
/// Trotter steps, sites n/2 - k/2 .. in Kronecker order (leftmost site is
/// the most significant bit).
pub fn ed_bulk_rdm(
    n: usize,
    sched: &AnnealingSchedule,
    grid: &TimeGrid,
    sampling: ScheduleSampling,
    upto_step: usize,
    k: usize,
) -> Result<Array2<Complex64>> {
    if k == 0 || k > 3 {
        return Err(CoreError::Guard(format!("bulk marginal supports 1..=3 sites, got {k}")));
    }
    if upto_step > grid.m {
        return Err(CoreError::Domain(format!(
            "upto_step {upto_step} exceeds grid height {}",
            grid.m
        )));
    }
    let mut chain = Chain::new(n)?;
    if n < k + 2 {
        return Err(CoreError::Guard(format!("chain of {n} sites too short for a {k}-site bulk")));
    }
    for step in 0..upto_step {
        let (a, b) = sched.eval(sampling.fraction(step, grid.m))?;
        chain.rotate_fields(a, grid.dt);
        chain.apply_bond_phases(b, grid.dt);
    }
    let start = n / 2 - k / 2;
    let dim = 1usize << k;
    let mut rho = Array2::zeros((dim, dim));
    for (conf, amp) in chain.psi.iter().enumerate() {
        let row = central_index(conf, start, k);
        let env = conf & !(((dim - 1) << start) as usize);
        for b_idx in 0..dim {
            let other = env | (spread(b_idx, start, k));
            rho[[row, b_idx]] += amp * chain.psi[other].conj();
        }
    }
    Ok(rho)
}

/// Kronecker row index of the k central bits: leftmost site most significant.
fn central_index(conf: usize, start: usize, k: usize) -> usize {
    let mut idx = 0usize;
    for j in 0..k {
        idx = (idx << 1) | ((conf >> (start + j)) & 1);
    }
    idx
}

/// Inverse of central_index into the bit positions start..start+k.
fn spread(idx: usize, start: usize, k: usize) -> usize {
    let mut conf = 0usize;
    for j in 0..k {
        conf |= ((idx >> (k - 1 - j)) & 1) << (start + j);
    }
    conf
}

/// Per-spin ground energy of -a sum sigma_x - b sum z z on a periodic n-site
/// chain, via power iteration on (c - H) with an on-the-fly matvec.
pub fn ed_ground_energy(n: usize, a: f64, b: f64) -> Result<f64> {
    if n < 2 || n > MAX_SITES {
        return Err(CoreError::Guard(format!(
            "ground-state oracle needs 2 <= n <= {MAX_SITES}, got {n}"
        )));
    }
    if a < 0.0 || b < 0.0 {
        return Err(CoreError::Domain(format!(
            "field amplitudes must be >= 0, got a = {a}, b = {b}"
        )));
    }
    let dim = 1usize << n;
    let shift = n as f64 * (a + b) + 1.0;
    let ring_mask = (dim - 1) as usize;
    let zz_sum: Vec<f64> = (0..dim)
        .map(|conf| {
            let rot = ((conf >> 1) | (conf << (n - 1))) & ring_mask;
            let flips = (conf ^ rot).count_ones() as f64;
            n as f64 - 2.0 * flips
        })
        .collect();
    let mut v = vec![1.0f64 / (dim as f64).sqrt(); dim];
    let mut w = vec![0.0f64; dim];
    let mut prev = f64::NAN;
    for iter in 0..200_000 {
        for conf in 0..dim {
            let mut acc = (shift + b * zz_sum[conf]) * v[conf];
            for i in 0..n {
                acc += a * v[conf ^ (1 << i)];
            }
            w[conf] = acc;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rayleigh: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        for (dst, src) in v.iter_mut().zip(&w) {
            *dst = src / norm;
        }
        if (rayleigh - prev).abs() < 1e-11 && iter > 10 {
            return Ok((shift - rayleigh) / n as f64);
        }
        prev = rayleigh;
    }
    Err(CoreError::Convergence { iterations: 200_000, last_distance: f64::NAN, tol: 1e-11 })
}
