//! Complex matrix-product states with deterministic truncated SVD.
//!
//! Tensor layout is `[left_bond, physical, right_bond]`, row-major. Chains
//! are open: outer bonds usually have dimension 1, but a left outer bond > 1
//! is allowed and treated as a dangling (spectator) index, which the reduced
//! density matrix extraction uses to thread open legs.
//!
//! Canonical forms: `canonicalize_right` makes every site right-canonical
//! (B-form) except the first, which carries the weight; `sweep_lr_trunc`
//! then truncates left-to-right, leaving A-form with the weight on the last
//! site. Starting the sweep from B-form makes each bond's singular values
//! the true Schmidt spectrum of the state at that cut, so truncation there
//! is optimal and the spectra come out as a byproduct.

use crate::error::{CoreError, Result};
use ndarray::{Array1, Array2, Array3, Array4, ArrayD, IxDyn};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;

pub type Tensor3 = Array3<Complex64>;
/// MPO site tensor layout: `[bond_toward_first, phys_in, phys_out, bond_toward_last]`.
pub type MpoTensor = Array4<Complex64>;

fn std3(t: Tensor3) -> Tensor3 {
    if t.is_standard_layout() {
        t
    } else {
        t.as_standard_layout().into_owned()
    }
}

fn std4(t: MpoTensor) -> MpoTensor {
    if t.is_standard_layout() {
        t
    } else {
        t.as_standard_layout().into_owned()
    }
}

fn reshape2(t: Tensor3, rows: usize, cols: usize) -> Array2<Complex64> {
    std3(t)
        .into_shape_with_order((rows, cols))
        .expect("element count preserved")
}

fn reshape3(m: Array2<Complex64>, l: usize, d: usize, r: usize) -> Tensor3 {
    m.into_shape_with_order((l, d, r)).expect("element count preserved")
}

/// Result of a truncated SVD: `m ≈ u · diag(s) · vt` with `discarded` the
/// squared-weight fraction dropped.
pub struct SvdTrunc {
    pub u: Array2<Complex64>,
    pub s: Array1<f64>,
    pub vt: Array2<Complex64>,
    pub discarded: f64,
}

fn dominant_row(u: &Array2<Complex64>, col: usize) -> usize {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (r, v) in u.column(col).iter().enumerate() {
        let mag = v.norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best = r;
        }
    }
    best
}

/// SVD with relative-tolerance truncation and a bond-dimension cap.
///
/// Degenerate singular values (relative gap below 1e-13) are ordered by the
/// dominant row index of their left singular vectors, so truncation is
/// deterministic even when the backend returns an arbitrary basis of a
/// degenerate subspace.
pub fn svd_trunc(m: &Array2<Complex64>, chi_max: usize, tol: f64) -> Result<SvdTrunc> {
    let (u, mut s, vt) = m.svddc(JobSvd::Some)?;
    let mut u = u.ok_or_else(|| CoreError::Numerical("svd returned no u".into()))?;
    let mut vt = vt.ok_or_else(|| CoreError::Numerical("svd returned no vt".into()))?;
    let k0 = s.len();
    if k0 == 0 {
        return Err(CoreError::Shape("svd of empty matrix".into()));
    }
    let s0 = s[0];
    if s0 == 0.0 {
        return Ok(SvdTrunc {
            u: u.slice(ndarray::s![.., ..1]).to_owned(),
            s: Array1::zeros(1),
            vt: vt.slice(ndarray::s![..1, ..]).to_owned(),
            discarded: 0.0,
        });
    }

    // deterministic ordering inside degenerate groups
    let mut order: Vec<usize> = (0..k0).collect();
    let mut permuted = false;
    let mut i = 0;
    while i < k0 {
        let mut j = i + 1;
        while j < k0 && (s[i] - s[j]).abs() <= 1e-13 * s0 {
            j += 1;
        }
        if j - i > 1 {
            order[i..j].sort_by_key(|&c| dominant_row(&u, c));
            permuted = true;
        }
        i = j;
    }
    if permuted {
        let up = Array2::from_shape_fn(u.dim(), |(r, c)| u[[r, order[c]]]);
        let vp = Array2::from_shape_fn(vt.dim(), |(r, c)| vt[[order[r], c]]);
        let sp = Array1::from_shape_fn(k0, |c| s[order[c]]);
        u = up;
        vt = vp;
        s = sp;
    }

    let total: f64 = s.iter().map(|x| x * x).sum();
    let keep = s.iter().filter(|&&x| x > tol * s0).count().clamp(1, chi_max.max(1));
    let disc: f64 = s.iter().skip(keep).map(|x| x * x).sum::<f64>() / total;
    Ok(SvdTrunc {
        u: u.slice(ndarray::s![.., ..keep]).to_owned(),
        s: s.slice(ndarray::s![..keep]).to_owned(),
        vt: vt.slice(ndarray::s![..keep, ..]).to_owned(),
        discarded: disc,
    })
}

/// Open-boundary matrix-product state.
#[derive(Clone, Debug)]
pub struct Mps {
    pub tensors: Vec<Tensor3>,
}

impl Mps {
    pub fn new(tensors: Vec<Tensor3>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(CoreError::Shape("empty MPS".into()));
        }
        for w in tensors.windows(2) {
            if w[0].dim().2 != w[1].dim().0 {
                return Err(CoreError::Shape(format!(
                    "bond mismatch: {:?} then {:?}",
                    w[0].dim(),
                    w[1].dim()
                )));
            }
        }
        Ok(Self { tensors })
    }

    /// Bond-1 product state from one vector per site.
    pub fn product(states: &[Array1<Complex64>]) -> Result<Self> {
        if states.is_empty() {
            return Err(CoreError::Shape("empty MPS".into()));
        }
        Ok(Self {
            tensors: states
                .iter()
                .map(|v| {
                    let d = v.len();
                    v.clone().into_shape_with_order((1, d, 1)).expect("vector reshape")
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim().1).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().take(self.len() - 1).map(|t| t.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Full contraction to a dense tensor; outer bonds must be 1.
    pub fn to_dense(&self) -> Result<ArrayD<Complex64>> {
        let dims = self.phys_dims();
        let total: usize = dims.iter().product();
        if total > 1 << 22 {
            return Err(CoreError::Guard(format!(
                "dense contraction of {total} entries refused (cap 2^22)"
            )));
        }
        let (l0, _, _) = self.tensors[0].dim();
        let (.., rn) = self.tensors[self.len() - 1].dim();
        if l0 != 1 || rn != 1 {
            return Err(CoreError::Shape("to_dense requires outer bonds of dimension 1".into()));
        }
        let (_, d0, r0) = self.tensors[0].dim();
        let mut acc = reshape2(self.tensors[0].clone(), d0, r0);
        for t in &self.tensors[1..] {
            let (l, d, r) = t.dim();
            let m = reshape2(t.clone(), l, d * r);
            let p = acc.nrows();
            acc = acc
                .dot(&m)
                .into_shape_with_order((p * d, r))
                .expect("element count preserved");
        }
        Ok(acc
            .into_shape_with_order(IxDyn(&dims))
            .expect("element count preserved"))
    }

    /// Frobenius norm (dangling outer bonds are summed over).
    pub fn norm(&self) -> f64 {
        let l0 = self.tensors[0].dim().0;
        let mut env: Array2<Complex64> = Array2::eye(l0);
        for t in &self.tensors {
            let (l, d, r) = t.dim();
            let m = reshape2(t.clone(), l, d * r);
            let x = env.dot(&m).into_shape_with_order((l * d, r)).expect("reshape");
            let a = reshape2(t.clone(), l * d, r).mapv(|z| z.conj());
            env = a.t().dot(&x);
        }
        env.diag().sum().norm().sqrt()
    }

    /// Multiplies the last tensor (the weight carrier in A-form).
    pub fn scale_tail(&mut self, f: Complex64) {
        let last = self.tensors.last_mut().expect("non-empty");
        last.mapv_inplace(|z| z * f);
    }

    /// Frobenius norm of the last tensor; equals the state norm in A-form.
    pub fn tail_norm(&self) -> f64 {
        self.tensors
            .last()
            .expect("non-empty")
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales the last tensor to unit norm, returning the removed factor.
    pub fn normalize_tail(&mut self) -> f64 {
        let n = self.tail_norm();
        if n > 0.0 {
            self.scale_tail(Complex64::new(1.0 / n, 0.0));
        }
        n
    }

    /// Right-canonicalizes sites `start+1 ..`, accumulating weight at `start`.
    pub fn canonicalize_right(&mut self, start: usize) -> Result<()> {
        use ndarray_linalg::QR;
        for i in (start + 1..self.len()).rev() {
            let t = std::mem::replace(&mut self.tensors[i], Array3::zeros((1, 1, 1)));
            let (l, d, r) = t.dim();
            let m = reshape2(t, l, d * r);
            let md = m.t().mapv(|z| z.conj());
            let (q, rr) = md.qr()?;
            let k = q.ncols();
            let qd = q.t().mapv(|z| z.conj());
            self.tensors[i] = reshape3(qd.as_standard_layout().into_owned(), k, d, r);
            let prev = std::mem::replace(&mut self.tensors[i - 1], Array3::zeros((1, 1, 1)));
            let (pl, pd, _) = prev.dim();
            let pm = reshape2(prev, pl * pd, l);
            let rd = rr.t().mapv(|z| z.conj());
            self.tensors[i - 1] = reshape3(pm.dot(&rd).as_standard_layout().into_owned(), pl, pd, k);
        }
        Ok(())
    }

    /// Left-to-right truncating SVD sweep. Input must be B-form except the
    /// first site (see module docs) for the collected spectra to be the true
    /// Schmidt spectra. Returns (max discarded weight, per-bond spectra).
    pub fn sweep_lr_trunc(
        &mut self,
        chi_max: usize,
        tol: f64,
        collect: bool,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let n = self.len();
        let mut worst = 0.0f64;
        let mut spectra = Vec::new();
        for i in 0..n.saturating_sub(1) {
            let t = std::mem::replace(&mut self.tensors[i], Array3::zeros((1, 1, 1)));
            let (l, d, r) = t.dim();
            let m = reshape2(t, l * d, r);
            let f = svd_trunc(&m, chi_max, tol)?;
            worst = worst.max(f.discarded);
            if collect {
                let nrm: f64 = f.s.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
                spectra.push(f.s.iter().map(|x| x * scale).collect());
            }
            let k = f.s.len();
            self.tensors[i] = reshape3(f.u, l, d, k);
            let mut carry = f.vt;
            for (mut row, sv) in carry.rows_mut().into_iter().zip(f.s.iter()) {
                row.map_inplace(|z| *z *= *sv);
            }
            let next = std::mem::replace(&mut self.tensors[i + 1], Array3::zeros((1, 1, 1)));
            let (nl, nd, nr) = next.dim();
            let nm = reshape2(next, nl, nd * nr);
            self.tensors[i + 1] = reshape3(carry.dot(&nm), k, nd, nr);
        }
        Ok((worst, spectra))
    }

    /// Canonicalize then truncate; returns the worst discarded weight.
    pub fn compress(&mut self, chi_max: usize, tol: f64) -> Result<f64> {
        Ok(self.compress_collect(chi_max, tol)?.0)
    }

    /// `compress` that also returns the post-truncation Schmidt spectra.
    pub fn compress_collect(
        &mut self,
        chi_max: usize,
        tol: f64,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        self.canonicalize_right(0)?;
        self.sweep_lr_trunc(chi_max, tol, true)
    }

    /// Normalized singular-value spectrum at every bond (non-destructive).
    pub fn schmidt_spectra(&self) -> Result<Vec<Vec<f64>>> {
        let mut c = self.clone();
        c.canonicalize_right(0)?;
        let (_, spectra) = c.sweep_lr_trunc(usize::MAX, 0.0, true)?;
        Ok(spectra)
    }

    /// Applies an MPO supplied site-by-site (called in order n-1 .. 0),
    /// truncating on the fly (zip-up, right-to-left) and finishing with a
    /// left-to-right optimal truncation sweep. The state should be A-form on
    /// entry for best zip accuracy; it is A-form on exit. Returns (max
    /// discarded weight, per-bond Schmidt spectra after truncation).
    pub fn apply_mpo_with<F>(
        &mut self,
        mut site: F,
        chi_max: usize,
        tol: f64,
    ) -> Result<(f64, Vec<Vec<f64>>)>
    where
        F: FnMut(usize) -> MpoTensor,
    {
        let n = self.len();
        let chi_zip = chi_max.saturating_mul(2).max(chi_max.saturating_add(8));
        let tol_zip = tol * 1e-2;
        let mut worst = 0.0f64;

        if n == 1 {
            let e = std3(self.tensors.pop().expect("non-empty"));
            let w = std4(site(0));
            let (le, d, re) = e.dim();
            let (lw, wd, b, rw) = w.dim();
            if d != wd || re != 1 || rw != 1 || lw != 1 {
                return Err(CoreError::Shape(format!(
                    "MPO site mismatch: state {:?} vs operator {:?}",
                    (le, d, re),
                    (lw, wd, b, rw)
                )));
            }
            let em = reshape2(e, le, d);
            let wm = w.into_shape_with_order((d, b)).expect("reshape");
            let t = em.dot(&wm);
            self.tensors.push(reshape3(t, le, b, 1));
            return Ok((0.0, Vec::new()));
        }

        // zip right-to-left; Z carries [(re·rw), k]
        let mut z: Array2<Complex64>;
        {
            let e = std3(std::mem::replace(
                &mut self.tensors[n - 1],
                Array3::zeros((1, 1, 1)),
            ));
            let w = std4(site(n - 1));
            let (le, d, re) = e.dim();
            let (lw, wd, b, rw) = w.dim();
            if d != wd || re != 1 || rw != 1 {
                return Err(CoreError::Shape(format!(
                    "MPO end mismatch: state {:?} vs operator {:?}",
                    (le, d, re),
                    (lw, wd, b, rw)
                )));
            }
            let em = reshape2(e, le, d);
            let wm = w
                .permuted_axes([1, 0, 2, 3])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((d, lw * b))
                .expect("reshape");
            let t = em.dot(&wm); // [le, lw·b]
            let t = t.into_shape_with_order((le * lw, b)).expect("reshape");
            let f = svd_trunc(&t, chi_zip, tol_zip)?;
            worst = worst.max(f.discarded);
            let k = f.s.len();
            self.tensors[n - 1] = reshape3(f.vt, k, b, 1);
            let mut u = f.u;
            for (mut col, sv) in u.columns_mut().into_iter().zip(f.s.iter()) {
                col.map_inplace(|zv| *zv *= *sv);
            }
            z = u; // [(le=re_{n-2})·lw, k]
        }
        for i in (1..n - 1).rev() {
            let e = std3(std::mem::replace(
                &mut self.tensors[i],
                Array3::zeros((1, 1, 1)),
            ));
            let w = std4(site(i));
            let (le, d, re) = e.dim();
            let (lw, wd, b, rw) = w.dim();
            let k = z.ncols();
            if d != wd || re * rw != z.nrows() {
                return Err(CoreError::Shape(format!(
                    "MPO chain mismatch at site {i}: state {:?}, operator {:?}, zipper {:?}",
                    (le, d, re),
                    (lw, wd, b, rw),
                    z.dim()
                )));
            }
            let zm = z.into_shape_with_order((re, rw * k)).expect("reshape");
            let t1 = reshape2(e, le * d, re).dot(&zm); // [le·d, rw·k]
            let t1 = t1
                .into_shape_with_order((le, d, rw, k))
                .expect("reshape")
                .permuted_axes([0, 3, 1, 2])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((le * k, d * rw))
                .expect("reshape");
            let wm = w
                .permuted_axes([1, 3, 0, 2])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((d * rw, lw * b))
                .expect("reshape");
            let t2 = t1.dot(&wm); // [le·k, lw·b]
            let t2 = t2
                .into_shape_with_order((le, k, lw, b))
                .expect("reshape")
                .permuted_axes([0, 2, 3, 1])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((le * lw, b * k))
                .expect("reshape");
            let f = svd_trunc(&t2, chi_zip, tol_zip)?;
            worst = worst.max(f.discarded);
            let kk = f.s.len();
            self.tensors[i] = reshape3(f.vt, kk, b, k);
            let mut u = f.u;
            for (mut col, sv) in u.columns_mut().into_iter().zip(f.s.iter()) {
                col.map_inplace(|zv| *zv *= *sv);
            }
            z = u;
        }
        {
            let e = std3(std::mem::replace(
                &mut self.tensors[0],
                Array3::zeros((1, 1, 1)),
            ));
            let w = std4(site(0));
            let (le, d, re) = e.dim();
            let (lw, wd, b, rw) = w.dim();
            let k = z.ncols();
            if d != wd || lw != 1 || re * rw != z.nrows() {
                return Err(CoreError::Shape(format!(
                    "MPO start mismatch: state {:?}, operator {:?}, zipper {:?}",
                    (le, d, re),
                    (lw, wd, b, rw),
                    z.dim()
                )));
            }
            let zm = z.into_shape_with_order((re, rw * k)).expect("reshape");
            let t1 = reshape2(e, le * d, re).dot(&zm); // [le·d, rw·k]
            let t1 = t1
                .into_shape_with_order((le, d, rw, k))
                .expect("reshape")
                .permuted_axes([0, 3, 1, 2])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((le * k, d * rw))
                .expect("reshape");
            let wm = w
                .permuted_axes([1, 3, 0, 2])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((d * rw, b))
                .expect("reshape");
            let t = t1.dot(&wm); // [le·k, b]
            let t = t
                .into_shape_with_order((le, k, b))
                .expect("reshape")
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .into_owned();
            self.tensors[0] = t;
        }
        let (sweep_worst, spectra) = self.sweep_lr_trunc(chi_max, tol, true)?;
        Ok((worst.max(sweep_worst), spectra))
    }

    /// Bilinear pairing sum_config self[config] * other[config]: both states'
    /// physical legs are contracted without conjugation. Outer bonds must be 1.
    pub fn bilinear_pair(&self, other: &Mps) -> Result<Complex64> {
        if self.phys_dims() != other.phys_dims() {
            return Err(CoreError::Shape(
                "bilinear pairing: physical dimensions differ".into(),
            ));
        }
        if self.tensors[0].dim().0 != 1 || other.tensors[0].dim().0 != 1 {
            return Err(CoreError::Shape(
                "bilinear pairing: dangling outer bond".into(),
            ));
        }
        let mut env: Array2<Complex64> = Array2::ones((1, 1));
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            env = pair_step(&env, a, b);
        }
        Ok(env[[0, 0]])
    }

    /// Elementwise (Hadamard) product with another MPS of equal physical dims.
    pub fn hadamard(&self, other: &Mps) -> Result<Mps> {
        if self.phys_dims() != other.phys_dims() {
            return Err(CoreError::Shape("hadamard: physical dimensions differ".into()));
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| {
                let (al, d, ar) = a.dim();
                let (bl, _, br) = b.dim();
                let mut out = Array3::zeros((al * bl, d, ar * br));
                for ia in 0..al {
                    for ib in 0..bl {
                        for p in 0..d {
                            for ja in 0..ar {
                                for jb in 0..br {
                                    out[[ia * bl + ib, p, ja * br + jb]] =
                                        a[[ia, p, ja]] * b[[ib, p, jb]];
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Mps { tensors })
    }
}

/// One transfer step of a bilinear pairing: env [la, lb] with a [la, d, ra]
/// and b [lb, d, rb] gives [ra, rb]. No conjugation.
pub(crate) fn pair_step(
    env: &Array2<Complex64>,
    a: &Tensor3,
    b: &Tensor3,
) -> Array2<Complex64> {
    let (la, d, ra) = a.dim();
    let (lb, _, rb) = b.dim();
    debug_assert_eq!(env.dim(), (la, lb));
    let am = reshape2(a.clone(), la, d * ra);
    let x = env
        .t()
        .dot(&am)
        .into_shape_with_order((lb * d, ra))
        .expect("element count preserved");
    let bm = reshape2(b.clone(), lb * d, rb);
    x.t().dot(&bm)
}

/// Mean per-bond L2 distance between two sets of normalized spectra;
/// infinite when the bond counts differ.
pub fn spectra_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let n = x.len().max(y.len());
        let mut d2 = 0.0;
        for i in 0..n {
            let xv = x.get(i).copied().unwrap_or(0.0);
            let yv = y.get(i).copied().unwrap_or(0.0);
            d2 += (xv - yv) * (xv - yv);
        }
        total += d2.sqrt();
    }
    total / a.len() as f64
}
