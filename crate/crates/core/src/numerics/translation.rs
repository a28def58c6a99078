//! Addition theorem for vector spherical wave functions.
//!
//! A wave centred at `c_s`, evaluated at `x = c_t + r`, is re-expanded in
//! regular waves about `c_t`; the displacement passed around here is always
//! `d = c_t − c_s`. For a source expansion with coefficients `(b^M, b^N)`
//! the regular coefficients about the target are
//!
//! ```text
//! a^M = A b^M + B b^N,    a^N = B b^M + A b^N.
//! ```
//!
//! Two routes produce `A` and `B`: a dense Gaunt contraction valid for any
//! displacement, and a rotate–translate-along-z–rotate-back factorization
//! that costs `O(L³)` per application instead of `O(L⁴)`.
//!
//! Both accept per-order logarithmic weights so the solver can work with
//! rescaled unknowns: entry `(n, ν)` is multiplied by
//! `exp(row_weight[n] + col_weight[ν])` inside the sum over intermediate
//! orders, before anything is exponentiated.

use super::{
    c, cg_rank1, cr, i_pow, ln_sph_h1_seq, ln_sph_j_seq, parity, wigner3j_range, Basis,
    NumericsError, Real, SphericalHarmonics, Vec3, WignerD,
};
use num_complex::Complex;
use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TranslationKind {
    /// Outgoing waves about the source re-expanded in regular waves about
    /// the target; valid inside the ball `|r| < |d|`.
    OutgoingToRegular,
    /// Regular waves re-expanded in regular waves; valid everywhere.
    RegularToRegular,
}

fn ln_radial<T: Real>(
    kind: TranslationKind,
    p_max: usize,
    z: Complex<T>,
) -> Result<Vec<Complex<T>>, NumericsError> {
    match kind {
        TranslationKind::OutgoingToRegular => {
            if z.norm() == T::zero() {
                return Err(NumericsError::Domain(
                    "outgoing-to-regular translation needs a nonzero displacement".into(),
                ));
            }
            ln_sph_h1_seq(p_max, z)
        }
        TranslationKind::RegularToRegular => ln_sph_j_seq(p_max, z),
    }
}

#[inline]
fn exp_term<T: Real>(ln: Complex<T>, w: T) -> Complex<T> {
    if ln.re == T::neg_infinity() {
        cr(T::zero())
    } else {
        (ln + w).exp()
    }
}

fn c1<T: Real>(n: i64) -> T {
    (T::of_int(n + 1) / T::of_int(2 * n + 1)).sqrt()
}

fn weight<T: Real>(w: Option<&[T]>, n: i64) -> T {
    w.map_or(T::zero(), |v| v[n as usize])
}

/// Scalar addition coefficients `S_{nm←νμ}` with `u_νμ(r + d) = Σ S_{nm←νμ} ũ_nm(r)`,
/// where `u = z_ν Y_νμ` and `ũ = j_n Y_nm`. Table is indexed
/// `[(n² + n + m) · (nu_max+1)² + ν² + ν + μ]`. Each `(n, ν)` entry is
/// multiplied by `exp(ln_weight(n, ν))` term by term.
pub fn scalar_translation<T: Real>(
    kind: TranslationKind,
    k: Complex<T>,
    d: &Vec3<T>,
    n_max: usize,
    nu_max: usize,
    ln_weight: &dyn Fn(i64, i64) -> T,
) -> Result<Vec<Complex<T>>, NumericsError> {
    let (dist, theta, phi) = d.to_spherical();
    let p_max = n_max + nu_max;
    let lz = ln_radial(kind, p_max, k * dist)?;
    let harm = SphericalHarmonics::new(p_max, theta, phi);
    let cols = (nu_max + 1) * (nu_max + 1);
    let rows = (n_max + 1) * (n_max + 1);
    let mut out = vec![cr(T::zero()); rows * cols];
    let sqrt_4pi = (T::lit(4.0) * T::PI()).sqrt();
    for n in 0..=n_max as i64 {
        for nu in 0..=nu_max as i64 {
            let (p0, zero3j) = wigner3j_range::<T>(n, nu, 0, 0);
            let w = ln_weight(n, nu);
            let pre_nn = sqrt_4pi * T::of_int((2 * n + 1) * (2 * nu + 1)).sqrt();
            for m in -n..=n {
                for mu in -nu..=nu {
                    let (pm, mj) = wigner3j_range::<T>(n, nu, m, -mu);
                    let mut acc = cr(T::zero());
                    for (i, w3) in mj.iter().enumerate() {
                        let p = pm + i as i64;
                        if (n + nu + p) % 2 == 1 || p < p0 {
                            continue;
                        }
                        let z0 = zero3j[(p - p0) as usize];
                        let y = harm.get(p, mu - m);
                        acc = acc
                            + i_pow::<T>(n + p - nu)
                                * exp_term(lz[p as usize], w)
                                * y
                                * (T::of_int(2 * p + 1).sqrt() * z0 * *w3);
                    }
                    let row = (n * n + n + m) as usize;
                    let col = (nu * nu + nu + mu) as usize;
                    out[row * cols + col] = acc * (pre_nn * parity::<T>(mu));
                }
            }
        }
    }
    Ok(out)
}

/// Dense vector translation operator over the truncated basis.
#[derive(Clone, Debug)]
pub struct TranslationMatrix<T> {
    pub displacement: Vec3<T>,
    pub wavenumber: Complex<T>,
    pub kind: TranslationKind,
    pub l_max: usize,
    /// Row-major `size × size`, rows are target indices.
    pub entries: Vec<Complex<T>>,
}

impl<T: Real> TranslationMatrix<T> {
    pub fn size(&self) -> usize {
        Basis::new(self.l_max).size()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.size() + col]
    }

    pub fn apply(&self, src: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.size();
        (0..n)
            .map(|r| {
                let row = &self.entries[r * n..(r + 1) * n];
                row.iter().zip(src).fold(cr(T::zero()), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Vec<Complex<T>> {
        let n = self.size();
        let mut out = vec![cr(T::zero()); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == cr(T::zero()) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] = out[i * n + j] + a * other.entries[k * n + j];
                }
            }
        }
        out
    }
}

/// Dense translation operator by Gaunt contraction, for any displacement.
pub fn translation<T: Real>(
    kind: TranslationKind,
    d: &Vec3<T>,
    k: Complex<T>,
    l_max: usize,
    row_weight: Option<&[T]>,
    col_weight: Option<&[T]>,
) -> Result<TranslationMatrix<T>, NumericsError> {
    let basis = Basis::new(l_max);
    let l = l_max as i64;
    // A uses scalar rows n, B uses rows n−1; weights follow the vector order
    let wa = |n: i64, nu: i64| {
        if n < 1 || nu < 1 {
            T::zero()
        } else {
            weight(row_weight, n) + weight(col_weight, nu)
        }
    };
    let wb = |n: i64, nu: i64| {
        if n + 1 > l || nu < 1 {
            T::zero()
        } else {
            weight(row_weight, n + 1) + weight(col_weight, nu)
        }
    };
    let sa = scalar_translation(kind, k, d, l_max, l_max, &wa)?;
    let sb = scalar_translation(kind, k, d, l_max, l_max, &wb)?;
    let cols = (l_max + 1) * (l_max + 1);
    let at = |n: i64, m: i64, nu: i64, mu: i64| ((n * n + n + m) as usize) * cols + (nu * nu + nu + mu) as usize;
    let size = basis.size();
    let block = basis.block();
    let mut entries = vec![cr(T::zero()); size * size];
    let i = c(T::zero(), T::one());
    for n in 1..=l {
        for m in -n..=n {
            let row = Basis::nm(n as usize, m);
            for nu in 1..=l {
                for mu in -nu..=nu {
                    let col = Basis::nm(nu as usize, mu);
                    let mut a = cr(T::zero());
                    let mut b = cr(T::zero());
                    for q in -1..=1i64 {
                        let cs = cg_rank1::<T>(nu, mu, q, nu);
                        if cs == T::zero() {
                            continue;
                        }
                        if (m - q).abs() <= n {
                            let ct = cg_rank1::<T>(n, m, q, n);
                            a = a + sa[at(n, m - q, nu, mu - q)] * (cs * ct);
                        }
                        if (m - q).abs() <= n - 1 {
                            let ct = cg_rank1::<T>(n - 1, m, q, n);
                            b = b + sb[at(n - 1, m - q, nu, mu - q)] * (cs * ct);
                        }
                    }
                    b = b / (i * c1::<T>(n));
                    entries[row * size + col] = a;
                    entries[(row + block) * size + col + block] = a;
                    entries[row * size + col + block] = b;
                    entries[(row + block) * size + col] = b;
                }
            }
        }
    }
    Ok(TranslationMatrix { displacement: *d, wavenumber: k, kind, l_max, entries })
}

/// Memoized `(n ν p; m −m 0)` and `(n ν p; 0 0 0)` over `p`, for the axial path.
#[derive(Clone, Debug)]
pub struct AxialThreeJ<T> {
    n_max: usize,
    m_max: usize,
    /// `[(n·(n_max+1) + ν)·(2 m_max + 1) + m + m_max] -> (p_min, values)`
    table: Vec<(i64, Vec<T>)>,
}

impl<T: Real> AxialThreeJ<T> {
    /// Tables for scalar orders `0..=n_max` and `|m| ≤ m_max`.
    pub fn new(n_max: usize, m_max: usize) -> Self {
        let dim = n_max + 1;
        let mm = 2 * m_max + 1;
        let mut table = vec![(0i64, Vec::new()); dim * dim * mm];
        for n in 0..dim {
            for nu in 0..dim {
                let lim = n.min(nu).min(m_max) as i64;
                for m in -lim..=lim {
                    table[(n * dim + nu) * mm + (m + m_max as i64) as usize] =
                        wigner3j_range::<T>(n as i64, nu as i64, m, -m);
                }
            }
        }
        Self { n_max, m_max, table }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    #[inline]
    fn get(&self, n: i64, nu: i64, m: i64) -> &(i64, Vec<T>) {
        let dim = self.n_max + 1;
        let mm = 2 * self.m_max + 1;
        &self.table[(n as usize * dim + nu as usize) * mm + (m + self.m_max as i64) as usize]
    }
}

type ThreeJCache = Mutex<HashMap<TypeId, Vec<Arc<dyn Any + Send + Sync>>>>;

/// Process-wide [`AxialThreeJ`] tables; a request is served by any cached
/// table that covers it, and a new table evicts the ones it covers.
pub fn shared_axial_three_j<T: Real>(n_max: usize, m_max: usize) -> Arc<AxialThreeJ<T>> {
    static CACHE: OnceLock<ThreeJCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let entries = guard.entry(TypeId::of::<T>()).or_default();
    let typed = |e: &Arc<dyn Any + Send + Sync>| e.clone().downcast::<AxialThreeJ<T>>().ok();
    if let Some(hit) = entries
        .iter()
        .filter_map(typed)
        .find(|t| t.n_max() >= n_max && t.m_max() >= m_max)
    {
        return hit;
    }
    let fresh = Arc::new(AxialThreeJ::<T>::new(n_max, m_max));
    entries.retain(|e| typed(e).is_some_and(|t| t.n_max() > n_max || t.m_max() > m_max));
    entries.push(fresh.clone());
    fresh
}

/// Translation along `±z`: block diagonal in `m`.
#[derive(Clone, Debug)]
pub struct AxialTranslation<T> {
    pub l_max: usize,
    pub m_max: usize,
    /// For each `m` in `−m_max..=m_max`: `(A, B)` blocks, row-major over
    /// `n, ν ∈ max(1,|m|)..=l_max`.
    blocks: Vec<(Vec<Complex<T>>, Vec<Complex<T>>)>,
}

/// Build the axial operator for displacement `sign · dist · ẑ`.
#[allow(clippy::too_many_arguments)]
pub fn axial_translation<T: Real>(
    kind: TranslationKind,
    k: Complex<T>,
    dist: T,
    sign: i64,
    l_max: usize,
    m_max: usize,
    three_j: &AxialThreeJ<T>,
    row_weight: Option<&[T]>,
    col_weight: Option<&[T]>,
) -> Result<AxialTranslation<T>, NumericsError> {
    assert!(three_j.n_max() >= l_max && three_j.m_max() >= (m_max + 1).min(l_max));
    let lz = ln_radial(kind, 2 * l_max + 1, k * dist)?;
    let l = l_max as i64;
    let i = c(T::zero(), T::one());
    // Radial factors i^{n'+p−ν} (2p+1) (±1)^p z_p (n' ν p; 0 0 0) e^{w}, shared by every m.
    // Index: [(n−1)·(l+1) + ν][shift] with shift 0 for n' = n and 1 for n' = n − 1.
    let radial = |np: i64, nu: i64, w: T| -> (i64, Vec<Complex<T>>) {
        let (p0, zero3j) = three_j.get(np, nu, 0);
        let vals = zero3j
            .iter()
            .enumerate()
            .map(|(idx, z0)| {
                let p = p0 + idx as i64;
                if (np + nu + p) % 2 == 1 {
                    return cr(T::zero());
                }
                let s = if sign < 0 { parity::<T>(p) } else { T::one() };
                i_pow::<T>(np + p - nu) * exp_term(lz[p as usize], w) * (T::of_int(2 * p + 1) * s * *z0)
            })
            .collect();
        (*p0, vals)
    };
    let stride = (l + 1) as usize;
    let mut radial_same = Vec::with_capacity(stride * stride);
    let mut radial_down = Vec::with_capacity(stride * stride);
    for n in 0..=l {
        for nu in 0..=l {
            if n == 0 || nu == 0 {
                radial_same.push((0, Vec::new()));
                radial_down.push((0, Vec::new()));
                continue;
            }
            let w = weight(row_weight, n) + weight(col_weight, nu);
            radial_same.push(radial(n, nu, w));
            radial_down.push(radial(n - 1, nu, w));
        }
    }
    let scalar = |np: i64, nu: i64, mq: i64, rad: &(i64, Vec<Complex<T>>)| -> Complex<T> {
        let (pm, mj) = three_j.get(np, nu, mq);
        let (p0, vals) = (rad.0, &rad.1);
        let mut acc = cr(T::zero());
        for (idx, w3) in mj.iter().enumerate() {
            acc = acc + vals[(pm + idx as i64 - p0) as usize] * *w3;
        }
        acc * (parity::<T>(mq) * T::of_int((2 * np + 1) * (2 * nu + 1)).sqrt())
    };
    let mut blocks = Vec::with_capacity(2 * m_max + 1);
    for m in -(m_max as i64)..=m_max as i64 {
        let lo = m.abs().max(1);
        let dim = (l - lo + 1).max(0) as usize;
        let mut a_blk = vec![cr(T::zero()); dim * dim];
        let mut b_blk = vec![cr(T::zero()); dim * dim];
        for n in lo..=l {
            for nu in lo..=l {
                let slot = n as usize * stride + nu as usize;
                let mut a = cr(T::zero());
                let mut b = cr(T::zero());
                for q in -1..=1i64 {
                    let mq = m - q;
                    if mq.abs() > nu {
                        continue;
                    }
                    let cs = cg_rank1::<T>(nu, m, q, nu);
                    if cs == T::zero() {
                        continue;
                    }
                    if mq.abs() <= n {
                        a = a + scalar(n, nu, mq, &radial_same[slot]) * (cs * cg_rank1::<T>(n, m, q, n));
                    }
                    if mq.abs() <= n - 1 {
                        b = b + scalar(n - 1, nu, mq, &radial_down[slot]) * (cs * cg_rank1::<T>(n - 1, m, q, n));
                    }
                }
                let idx = (n - lo) as usize * dim + (nu - lo) as usize;
                a_blk[idx] = a;
                b_blk[idx] = b / (i * c1::<T>(n));
            }
        }
        blocks.push((a_blk, b_blk));
    }
    Ok(AxialTranslation { l_max, m_max, blocks })
}

impl<T: Real> AxialTranslation<T> {
    /// Operator for the opposite displacement, from the parity of the
    /// addition coefficients: `A → (−1)^{n+ν} A`, `B → (−1)^{n+ν+1} B`.
    pub fn reversed(&self) -> Self {
        let l = self.l_max as i64;
        let blocks = (-(self.m_max as i64)..=self.m_max as i64)
            .map(|m| {
                let lo = m.abs().max(1);
                let dim = (l - lo + 1).max(0) as usize;
                let (a, b) = self.block(m);
                let mut ra = a.to_vec();
                let mut rb = b.to_vec();
                for i in 0..dim {
                    for j in 0..dim {
                        if (i + j) % 2 == 1 {
                            ra[i * dim + j] = -ra[i * dim + j];
                        } else {
                            rb[i * dim + j] = -rb[i * dim + j];
                        }
                    }
                }
                (ra, rb)
            })
            .collect();
        Self { l_max: self.l_max, m_max: self.m_max, blocks }
    }

    /// `(A, B)` for azimuthal index `m`, rows/cols over `n ∈ max(1,|m|)..=l_max`.
    pub fn block(&self, m: i64) -> (&[Complex<T>], &[Complex<T>]) {
        let (a, b) = &self.blocks[(m + self.m_max as i64) as usize];
        (a, b)
    }

    /// `dst += T · src` over the full basis; orders with `|m| > m_max` are skipped.
    pub fn apply_add(&self, src: &[Complex<T>], dst: &mut [Complex<T>]) {
        let basis = Basis::new(self.l_max);
        let block = basis.block();
        let l = self.l_max as i64;
        for m in -(self.m_max as i64)..=self.m_max as i64 {
            let lo = m.abs().max(1);
            if lo > l {
                continue;
            }
            let dim = (l - lo + 1) as usize;
            let (a, b) = self.block(m);
            for n in lo..=l {
                let row = Basis::nm(n as usize, m);
                let mut te = cr(T::zero());
                let mut tm = cr(T::zero());
                let ra = &a[(n - lo) as usize * dim..(n - lo + 1) as usize * dim];
                let rb = &b[(n - lo) as usize * dim..(n - lo + 1) as usize * dim];
                for nu in lo..=l {
                    let col = Basis::nm(nu as usize, m);
                    let j = (nu - lo) as usize;
                    let (sm, sn) = (src[col], src[col + block]);
                    te = te + ra[j] * sm + rb[j] * sn;
                    tm = tm + rb[j] * sm + ra[j] * sn;
                }
                dst[row] = dst[row] + te;
                dst[row + block] = dst[row + block] + tm;
            }
        }
    }
}

/// Rotation `R = R_z(φ) R_y(θ)` taking `ẑ` to a given direction, acting on
/// multipole coefficients.
#[derive(Clone, Debug)]
pub struct Rotation<T> {
    wigner: WignerD<T>,
    phi: T,
    l_max: usize,
}

impl<T: Real> Rotation<T> {
    pub fn aligning(dir: &Vec3<T>, l_max: usize) -> Self {
        let (_, theta, phi) = dir.to_spherical();
        Self { wigner: WignerD::new(l_max, phi, theta, T::zero()), phi, l_max }
    }

    fn phases(&self, sign: T) -> Vec<Complex<T>> {
        let l = self.l_max as i64;
        (-l..=l)
            .map(|m| {
                let (s, co) = (T::of_int(m) * self.phi * sign).sin_cos();
                c(co, s)
            })
            .collect()
    }

    /// Coefficients of the same field described in the rotated frame
    /// (`c' = D(R⁻¹) c`).
    pub fn to_frame(&self, src: &[Complex<T>]) -> Vec<Complex<T>> {
        let ph = self.phases(T::one());
        let l = self.l_max as i64;
        let basis = Basis::new(self.l_max);
        let block = basis.block();
        let mut out = vec![cr(T::zero()); basis.size()];
        let mut te = Vec::with_capacity(2 * self.l_max + 1);
        let mut tm = Vec::with_capacity(2 * self.l_max + 1);
        for n in 1..=l {
            te.clear();
            tm.clear();
            for m in -n..=n {
                let col = Basis::nm(n as usize, m);
                let f = ph[(m + l) as usize];
                te.push(src[col] * f);
                tm.push(src[col + block] * f);
            }
            for (m, (a, b)) in (-n..=n).zip(te.iter().zip(&tm)) {
                for mp in -n..=n {
                    let d = self.wigner.small_d(n, m, mp);
                    let row = Basis::nm(n as usize, mp);
                    out[row] = out[row] + *a * d;
                    out[row + block] = out[row + block] + *b * d;
                }
            }
        }
        out
    }

    /// Inverse of [`Rotation::to_frame`] (`c = D(R) c'`).
    pub fn from_frame(&self, src: &[Complex<T>]) -> Vec<Complex<T>> {
        let ph = self.phases(-T::one());
        let l = self.l_max as i64;
        let basis = Basis::new(self.l_max);
        let block = basis.block();
        let mut out = vec![cr(T::zero()); basis.size()];
        for n in 1..=l {
            for mp in -n..=n {
                let (mut te, mut tm) = (cr(T::zero()), cr(T::zero()));
                for m in -n..=n {
                    let d = self.wigner.small_d(n, mp, m);
                    let col = Basis::nm(n as usize, m);
                    te = te + src[col] * d;
                    tm = tm + src[col + block] * d;
                }
                let row = Basis::nm(n as usize, mp);
                let f = ph[(mp + l) as usize];
                out[row] = te * f;
                out[row + block] = tm * f;
            }
        }
        out
    }
}

/// `out_{n m'} = Σ_m D(n, m', m) src_{n m}` for both polarizations.
pub fn rotate_coefficients<T: Real>(
    l_max: usize,
    src: &[Complex<T>],
    d: impl Fn(i64, i64, i64) -> Complex<T>,
) -> Vec<Complex<T>> {
    let basis = Basis::new(l_max);
    let block = basis.block();
    let mut out = vec![cr(T::zero()); basis.size()];
    for n in 1..=l_max as i64 {
        for mp in -n..=n {
            let row = Basis::nm(n as usize, mp);
            let mut te = cr(T::zero());
            let mut tm = cr(T::zero());
            for m in -n..=n {
                let col = Basis::nm(n as usize, m);
                let f = d(n, mp, m);
                te = te + f * src[col];
                tm = tm + f * src[col + block];
            }
            out[row] = te;
            out[row + block] = tm;
        }
    }
    out
}

/// Translation by an arbitrary displacement through rotation to the local
/// `z` axis, reusable across many applications.
#[derive(Clone, Debug)]
pub struct RotatedTranslation<T> {
    rotation: Rotation<T>,
    axial: AxialTranslation<T>,
}

impl<T: Real> RotatedTranslation<T> {
    pub fn new(
        kind: TranslationKind,
        k: Complex<T>,
        d: &Vec3<T>,
        l_max: usize,
        three_j: &AxialThreeJ<T>,
        row_weight: Option<&[T]>,
        col_weight: Option<&[T]>,
    ) -> Result<Self, NumericsError> {
        let dist = d.norm();
        let rotation = if dist > T::zero() {
            Rotation::aligning(d, l_max)
        } else {
            Rotation::aligning(&Vec3::unit_z(), l_max)
        };
        let axial = axial_translation(kind, k, dist, 1, l_max, l_max, three_j, row_weight, col_weight)?;
        Ok(Self { rotation, axial })
    }

    /// `dst += T · src`.
    pub fn apply_add(&self, src: &[Complex<T>], dst: &mut [Complex<T>]) {
        let local = self.rotation.to_frame(src);
        let mut moved = vec![cr(T::zero()); local.len()];
        self.axial.apply_add(&local, &mut moved);
        let back = self.rotation.from_frame(&moved);
        for (d, v) in dst.iter_mut().zip(back) {
            *d = *d + v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{expansion_value, vswf_field, CVec3, WaveKind};
    use super::*;

    type C = Complex<f64>;

    fn rel_max(a: &[C], b: &[C]) -> f64 {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn zero_displacement_is_identity() {
        let t = translation(TranslationKind::RegularToRegular, &Vec3::zero(), C::new(1.7e7, 0.0), 6, None, None).unwrap();
        let n = t.size();
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((t.get(i, j) - e).norm() <= 1e-14, "({i},{j}) {}", t.get(i, j));
            }
        }
    }

    #[test]
    fn outgoing_zero_displacement_is_domain_error() {
        let r = translation(TranslationKind::OutgoingToRegular, &Vec3::<f64>::zero(), C::new(1.0, 0.0), 2, None, None);
        assert!(matches!(r, Err(NumericsError::Domain(_))));
    }

    fn check_pointwise(kind: TranslationKind, wave: WaveKind, l_max: usize, src_l: usize) {
        // source waves about c_s evaluated at x = c_t + r
        let k = C::new(2.0 * std::f64::consts::PI / 380e-9, 0.0);
        let c_s = Vec3::new(0.0, 0.0, 0.0);
        let c_t = Vec3::new(12e-9, -9e-9, 14e-9);
        let d = c_t - c_s;
        let r = Vec3::new(2e-9, 3e-9, -1.5e-9);
        let direct = vswf_field(wave, k, &(d + r), src_l, None).unwrap();
        let regular = vswf_field(WaveKind::Regular, k, &r, l_max, None).unwrap();
        let t = translation(kind, &d, k, l_max, None, None).unwrap();
        let three_j = AxialThreeJ::new(l_max + 1, l_max);
        let fast = RotatedTranslation::new(kind, k, &d, l_max, &three_j, None, None).unwrap();
        let basis_s = Basis::new(src_l);
        let basis_t = Basis::new(l_max);
        for idx in basis_s.iter() {
            let mut src = vec![C::new(0.0, 0.0); basis_t.size()];
            src[basis_t.index(idx)] = C::new(1.0, 0.0);
            let coeffs = t.apply(&src);
            let value = expansion_value(&coeffs, &regular);
            let want: CVec3<f64> = direct[basis_s.index(idx)];
            assert!((value - want).norm() < 1e-7 * want.norm(), "{idx:?}: {:?} vs {:?}", value, want);
            let mut fast_coeffs = vec![C::new(0.0, 0.0); basis_t.size()];
            fast.apply_add(&src, &mut fast_coeffs);
            assert!(rel_max(&fast_coeffs, &coeffs) < 1e-10, "{idx:?}");
        }
    }

    #[test]
    fn outgoing_to_regular_pointwise() {
        check_pointwise(TranslationKind::OutgoingToRegular, WaveKind::Outgoing, 14, 3);
    }

    #[test]
    fn regular_to_regular_pointwise() {
        check_pointwise(TranslationKind::RegularToRegular, WaveKind::Regular, 12, 3);
    }

    #[test]
    fn pointwise_at_reference_separation() {
        // |D| = 21 nm, l_max = 30, fast path only (dense Gaunt at this order is slow)
        let l_max = 30;
        let k = C::new(4.8e15 / 299_792_458.0, 0.0);
        let d = Vec3::new(0.0, 21e-9, 0.0);
        let r = Vec3::new(3e-9, -4e-9, 6e-9);
        let direct = vswf_field(WaveKind::Outgoing, k, &(d + r), 4, None).unwrap();
        let regular = vswf_field(WaveKind::Regular, k, &r, l_max, None).unwrap();
        let three_j = AxialThreeJ::new(l_max + 1, l_max);
        let fast = RotatedTranslation::new(TranslationKind::OutgoingToRegular, k, &d, l_max, &three_j, None, None).unwrap();
        let bs = Basis::new(4);
        let bt = Basis::new(l_max);
        for idx in bs.iter() {
            let mut src = vec![C::new(0.0, 0.0); bt.size()];
            src[bt.index(idx)] = C::new(1.0, 0.0);
            let mut out = vec![C::new(0.0, 0.0); bt.size()];
            fast.apply_add(&src, &mut out);
            let v = expansion_value(&out, &regular);
            let want = direct[bs.index(idx)];
            assert!((v - want).norm() < 1e-7 * want.norm(), "{idx:?}");
        }
    }

    #[test]
    fn second_route_for_cross_polarization_agrees() {
        // B from the j_{n+1} Y^{n+1} component must equal B from j_{n-1} Y^{n-1}
        let k = C::new(1.3, 0.1);
        let d = Vec3::new(0.8, -1.1, 2.3);
        let l = 6i64;
        let s = scalar_translation(TranslationKind::OutgoingToRegular, k, &d, l as usize + 1, l as usize, &|_, _| 0.0).unwrap();
        let t = translation(TranslationKind::OutgoingToRegular, &d, k, l as usize, None, None).unwrap();
        let cols = ((l + 1) * (l + 1)) as usize;
        let at = |n: i64, m: i64, nu: i64, mu: i64| ((n * n + n + m) as usize) * cols + (nu * nu + nu + mu) as usize;
        let basis = Basis::new(l as usize);
        for n in 1..=l - 1 {
            for m in -n..=n {
                for nu in 1..=l {
                    for mu in -nu..=nu {
                        let mut b = C::new(0.0, 0.0);
                        for q in -1..=1 {
                            if (m - q).abs() > n + 1 || (mu - q).abs() > nu {
                                continue;
                            }
                            b += s[at(n + 1, m - q, nu, mu - q)]
                                * cg_rank1::<f64>(n + 1, m, q, n)
                                * cg_rank1::<f64>(nu, mu, q, nu);
                        }
                        let c2 = (n as f64 / (2 * n + 1) as f64).sqrt();
                        b /= C::new(0.0, -c2);
                        let row = Basis::nm(n as usize, m);
                        let col = Basis::nm(nu as usize, mu) + basis.block();
                        let direct = t.get(row, col);
                        assert!((b - direct).norm() < 1e-10 * (1.0 + direct.norm()), "n={n} m={m} nu={nu} mu={mu}");
                    }
                }
            }
        }
    }

    #[test]
    fn composition_error_shrinks_with_order() {
        let k = C::new(1.0, 0.0);
        let d1 = Vec3::new(0.6, 0.2, -0.4);
        let d2 = Vec3::new(-0.3, 0.5, 0.7);
        let kind = TranslationKind::RegularToRegular;
        let probe_l = 3usize;
        let mut prev = f64::INFINITY;
        for l_max in [15usize, 20, 25, 30, 35] {
            let three_j = AxialThreeJ::new(l_max + 1, l_max);
            let t1 = RotatedTranslation::new(kind, k, &d1, l_max, &three_j, None, None).unwrap();
            let t2 = RotatedTranslation::new(kind, k, &d2, l_max, &three_j, None, None).unwrap();
            let t12 = RotatedTranslation::new(kind, k, &(d1 + d2), l_max, &three_j, None, None).unwrap();
            let basis = Basis::new(l_max);
            let probe = Basis::new(probe_l);
            let mut worst: f64 = 0.0;
            for idx in probe.iter() {
                let mut src = vec![C::new(0.0, 0.0); basis.size()];
                src[basis.index(idx)] = C::new(1.0, 0.0);
                let mut a = vec![C::new(0.0, 0.0); basis.size()];
                t1.apply_add(&src, &mut a);
                let mut b = vec![C::new(0.0, 0.0); basis.size()];
                t2.apply_add(&a, &mut b);
                let mut direct = vec![C::new(0.0, 0.0); basis.size()];
                t12.apply_add(&src, &mut direct);
                for j in probe.iter() {
                    let i = basis.index(j);
                    worst = worst.max((b[i] - direct[i]).norm());
                }
            }
            assert!(worst <= prev, "l_max={l_max}: {worst} > {prev}");
            prev = worst;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn weights_scale_entries() {
        let k = C::new(1.1, 0.0);
        let d = Vec3::new(0.0, 0.0, 2.5);
        let l = 5;
        let rw: Vec<f64> = (0..=l).map(|n| -0.3 * n as f64).collect();
        let cw: Vec<f64> = (0..=l).map(|n| 0.2 * n as f64 + 0.1).collect();
        let plain = translation(TranslationKind::OutgoingToRegular, &d, k, l, None, None).unwrap();
        let scaled = translation(TranslationKind::OutgoingToRegular, &d, k, l, Some(&rw), Some(&cw)).unwrap();
        let basis = Basis::new(l);
        let three_j = AxialThreeJ::new(l + 1, l);
        let ax = axial_translation(TranslationKind::OutgoingToRegular, k, 2.5, 1, l, l, &three_j, Some(&rw), Some(&cw)).unwrap();
        for r in basis.iter() {
            for cidx in basis.iter() {
                let f = (rw[r.n] + cw[cidx.n]).exp();
                let (i, j) = (basis.index(r), basis.index(cidx));
                assert!((plain.get(i, j) * f - scaled.get(i, j)).norm() < 1e-12 * (1.0 + scaled.get(i, j).norm()));
            }
        }
        for cidx in basis.iter() {
            let mut src = vec![C::new(0.0, 0.0); basis.size()];
            src[basis.index(cidx)] = C::new(1.0, 0.0);
            let mut out = vec![C::new(0.0, 0.0); basis.size()];
            ax.apply_add(&src, &mut out);
            let col: Vec<C> = (0..basis.size()).map(|i| scaled.get(i, basis.index(cidx))).collect();
            assert!(rel_max(&out, &col) < 1e-12);
        }
    }

    #[test]
    fn reversal_matches_negative_axis() {
        let k = C::new(1.4, 0.02);
        let l = 7;
        let rw: Vec<f64> = (0..=l).map(|n| -0.2 * n as f64).collect();
        let three_j = shared_axial_three_j::<f64>(l + 1, l);
        let plus = axial_translation(TranslationKind::OutgoingToRegular, k, 2.2, 1, l, 3, &three_j, Some(&rw), None).unwrap();
        let minus = axial_translation(TranslationKind::OutgoingToRegular, k, 2.2, -1, l, 3, &three_j, Some(&rw), None).unwrap();
        let rev = plus.reversed();
        for m in -3..=3 {
            let (a, b) = minus.block(m);
            let (ra, rb) = rev.block(m);
            for (x, y) in a.iter().chain(b).zip(ra.iter().chain(rb)) {
                assert!((x - y).norm() < 1e-13 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn negative_axis_matches_rotation() {
        let k = C::new(0.9, 0.0);
        let l = 6;
        let three_j = AxialThreeJ::new(l + 1, l);
        let ax = axial_translation(TranslationKind::OutgoingToRegular, k, 3.0, -1, l, l, &three_j, None, None).unwrap();
        let dense = translation(TranslationKind::OutgoingToRegular, &Vec3::new(0.0, 0.0, -3.0), k, l, None, None).unwrap();
        let basis = Basis::new(l);
        for cidx in basis.iter() {
            let mut src = vec![C::new(0.0, 0.0); basis.size()];
            src[basis.index(cidx)] = C::new(1.0, 0.0);
            let mut out = vec![C::new(0.0, 0.0); basis.size()];
            ax.apply_add(&src, &mut out);
            let col: Vec<C> = (0..basis.size()).map(|i| dense.get(i, basis.index(cidx))).collect();
            assert!(rel_max(&out, &col) < 1e-12);
        }
    }

    #[test]
    fn rotation_round_trip_and_field_consistency() {
        let l = 5;
        let dir = Vec3::new(0.3, -0.6, 0.2).normalized();
        let rot = Rotation::aligning(&dir, l);
        let basis = Basis::new(l);
        let src: Vec<C> = (0..basis.size()).map(|i| C::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let back = rot.from_frame(&rot.to_frame(&src));
        assert!(rel_max(&back, &src) < 1e-13);
        // field in rotated frame: F'(x') = R⁻¹ F(R x')
        let (_, th, ph) = dir.to_spherical();
        let rz = [[ph.cos(), -ph.sin(), 0.0], [ph.sin(), ph.cos(), 0.0], [0.0, 0.0, 1.0]];
        let ry = [[th.cos(), 0.0, th.sin()], [0.0, 1.0, 0.0], [-th.sin(), 0.0, th.cos()]];
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    r[i][j] += rz[i][k] * ry[k][j];
                }
            }
        }
        let xp = Vec3::new(0.4, 0.9, -0.3);
        let x = Vec3::new(
            r[0][0] * xp.x + r[0][1] * xp.y + r[0][2] * xp.z,
            r[1][0] * xp.x + r[1][1] * xp.y + r[1][2] * xp.z,
            r[2][0] * xp.x + r[2][1] * xp.y + r[2][2] * xp.z,
        );
        let k = C::new(1.2, 0.0);
        let f_lab = expansion_value(&src, &vswf_field(WaveKind::Outgoing, k, &x, l, None).unwrap());
        let f_rot = expansion_value(&rot.to_frame(&src), &vswf_field(WaveKind::Outgoing, k, &xp, l, None).unwrap());
        // R⁻¹ F(x) = Rᵀ F(x)
        for i in 0..3 {
            let v: C = (0..3).map(|k| f_lab[k] * r[k][i]).sum();
            assert!((v - f_rot[i]).norm() < 1e-12 * f_lab.norm());
        }
    }
}
