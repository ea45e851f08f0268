//! Gauss-Legendre quadrature with composite panels.

use num_complex::Complex64;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; nodes come out sorted
/// ascending and exactly antisymmetric about 0.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), derivative from the standard identity
            pp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Integrate a real function over [a, b] with panels of width at most `panel`.
pub fn integrate(a: f64, b: f64, panel: f64, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(order);
    let n_panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / n_panels as f64;
    let mut acc = 0.0;
    for p in 0..n_panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (xi, wi) in x.iter().zip(&w) {
            acc += r * wi * f(c + r * xi);
        }
    }
    acc
}

/// Complex-valued variant of [`integrate`].
pub fn integrate_c(
    a: f64,
    b: f64,
    panel: f64,
    order: usize,
    f: impl Fn(f64) -> Complex64,
) -> Complex64 {
    let (x, w) = gauss_legendre(order);
    let n_panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / n_panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n_panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (xi, wi) in x.iter().zip(&w) {
            acc += f(c + r * xi) * (r * wi);
        }
    }
    acc
}
