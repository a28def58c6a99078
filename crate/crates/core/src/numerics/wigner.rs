//! Wigner 3j symbols by three-term recursion in the third angular momentum
//! and Wigner rotation matrices through Jacobi polynomials.

use super::{c, parity, Real};
use num_complex::Complex;

const RESCALE_AT: f64 = 1e100;

/// `(j1 j2 j; m1 m2 −m1−m2)` for every allowed `j`.
///
/// Returns `(j_min, values)` with `values[i]` belonging to `j = j_min + i`.
/// The sequence is empty when the magnetic numbers are out of range.
pub fn wigner3j_range<T: Real>(j1: i64, j2: i64, m1: i64, m2: i64) -> (i64, Vec<T>) {
    let m3 = -m1 - m2;
    if j1 < 0 || j2 < 0 || m1.abs() > j1 || m2.abs() > j2 {
        return (0, Vec::new());
    }
    let j_min = (j1 - j2).abs().max(m3.abs());
    let j_max = j1 + j2;
    if j_min > j_max {
        return (j_min, Vec::new());
    }
    let len = (j_max - j_min + 1) as usize;
    if len == 1 {
        let v = T::one() / T::of_int(2 * j_min + 1).sqrt();
        return (j_min, vec![v * parity::<T>(j1 - j2 - m3)]);
    }

    let f = |x: i64| T::of_int(x);
    let a = |j: i64| -> T {
        let t1 = f(j * j - (j1 - j2) * (j1 - j2));
        let t2 = f((j1 + j2 + 1) * (j1 + j2 + 1) - j * j);
        let t3 = f(j * j - m3 * m3);
        (t1 * t2 * t3).max(T::zero()).sqrt()
    };
    let b = |j: i64| -> T {
        -f(2 * j + 1)
            * (f(j1 * (j1 + 1) * m3) - f(j2 * (j2 + 1) * m3) - f(j * (j + 1)) * f(m2 - m1))
    };
    let big = T::lit(RESCALE_AT);

    // backward from j_max
    let mut bwd = vec![T::zero(); len];
    bwd[len - 1] = T::one();
    let mut j_b = j_min;
    let mut found_b = false;
    for idx in (1..len).rev() {
        let j = j_min + idx as i64;
        let next = if idx + 1 < len { bwd[idx + 1] } else { T::zero() };
        let val = -(f(j) * a(j + 1) * next + b(j) * bwd[idx]) / (f(j + 1) * a(j));
        bwd[idx - 1] = val;
        if !found_b && val.abs() < bwd[idx].abs() {
            j_b = j;
            found_b = true;
        }
        if val.abs() > big {
            for v in bwd[idx - 1..].iter_mut() {
                *v = *v / big;
            }
        }
    }
    if !found_b {
        j_b = j_min;
    }

    // forward from j_min
    let mut fwd = vec![T::zero(); len];
    let mut start = 1usize;
    if j_min == 0 {
        // j1 = j2 and m3 = 0: closed forms for j = 0 and j = 1
        let jj = j1;
        let mm = m1;
        fwd[0] = parity::<T>(jj - mm) / f(2 * jj + 1).sqrt();
        fwd[1] = parity::<T>(jj - mm) * f(mm) / f(jj * (jj + 1) * (2 * jj + 1)).sqrt();
        start = 2;
    } else {
        fwd[0] = T::one();
    }
    let mut j_f = j_max;
    let mut computed = start;
    for idx in start..len {
        let j = j_min + idx as i64 - 1;
        let prev2 = if idx >= 2 { fwd[idx - 2] } else { T::zero() };
        let val = -(b(j) * fwd[idx - 1] + f(j + 1) * a(j) * prev2) / (f(j) * a(j + 1));
        fwd[idx] = val;
        computed = idx + 1;
        if j_f == j_max && val.abs() < fwd[idx - 1].abs() {
            j_f = j;
        }
        if val.abs() > big {
            for v in fwd[..=idx].iter_mut() {
                *v = *v / big;
            }
        }
        if j_f != j_max && j + 1 >= j_b {
            break;
        }
    }
    let lo = j_f.min(j_b).max(j_min);
    let hi = j_f.max(j_b).min(j_min + computed as i64 - 1);
    let (lo, hi) = if lo > hi { (hi, hi) } else { (lo, hi) };
    let mut num = T::zero();
    let mut den = T::zero();
    for j in lo..=hi {
        let i = (j - j_min) as usize;
        num = num + fwd[i] * bwd[i];
        den = den + bwd[i] * bwd[i];
    }
    let lambda = if den > T::zero() { num / den } else { T::one() };
    let mid = (lo + hi) / 2;
    let mut out: Vec<T> = (0..len)
        .map(|i| {
            let j = j_min + i as i64;
            if j <= mid && i < computed {
                fwd[i]
            } else {
                lambda * bwd[i]
            }
        })
        .collect();
    // a rescale between the sequences can leave the forward part negligible;
    // normalization below fixes the overall factor
    let norm: T = out
        .iter()
        .enumerate()
        .map(|(i, v)| f(2 * (j_min + i as i64) + 1) * *v * *v)
        .sum();
    let mut scale = T::one() / norm.sqrt();
    let want = parity::<T>(j1 - j2 - m3);
    if (out[len - 1] * want) < T::zero() {
        scale = -scale;
    }
    for v in out.iter_mut() {
        *v = *v * scale;
    }
    (j_min, out)
}

fn ln_factorials<T: Real>(n: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n + 1];
    for i in 1..=n {
        v[i] = v[i - 1] + T::of_usize(i).ln();
    }
    v
}

fn jacobi<T: Real>(k: i64, a: i64, b: i64, x: T) -> T {
    if k == 0 {
        return T::one();
    }
    let f = |v: i64| T::of_int(v);
    let mut p0 = T::one();
    let mut p1 = f(a + 1) + f(a + b + 2) * (x - T::one()) / f(2);
    for n in 2..=k {
        let s = 2 * n + a + b;
        let c1 = f(2 * n * (n + a + b) * (s - 2));
        let c2 = f(s - 1) * (f(s * (s - 2)) * x + f(a * a - b * b));
        let c3 = f(2 * (n + a - 1) * (n + b - 1) * s);
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn small_d_element<T: Real>(j: i64, mp: i64, m: i64, beta: T, lnf: &[T]) -> T {
    let k = (j + m).min(j - m).min(j + mp).min(j - mp);
    let (a, lambda) = if k == j + m {
        (mp - m, mp - m)
    } else if k == j - m {
        (m - mp, 0)
    } else if k == j + mp {
        (m - mp, 0)
    } else {
        (mp - m, mp - m)
    };
    let b = 2 * j - 2 * k - a;
    let ln_binom = |n: i64, r: i64| lnf[n as usize] - lnf[r as usize] - lnf[(n - r) as usize];
    let pref = (T::lit(0.5) * ln_binom(2 * j - k, k + a) - T::lit(0.5) * ln_binom(k + b, b)).exp();
    let half = beta * T::lit(0.5);
    let (s, co) = half.sin_cos();
    parity::<T>(lambda) * pref * s.powi(a as i32) * co.powi(b as i32) * jacobi(k, a, b, beta.cos())
}

/// Small Wigner matrix `d^j_{m'm}(β)` as a dense `(2j+1)²` row-major block,
/// row `m' + j`, column `m + j`.
pub fn wigner_small_d<T: Real>(j: i64, beta: T) -> Vec<T> {
    let lnf = ln_factorials::<T>((2 * j + 2) as usize);
    let dim = (2 * j + 1) as usize;
    let mut out = vec![T::zero(); dim * dim];
    for mp in -j..=j {
        for m in -j..=j {
            out[(mp + j) as usize * dim + (m + j) as usize] = small_d_element(j, mp, m, beta, &lnf);
        }
    }
    out
}

/// Wigner rotation matrices `D^j_{m'm}(α, β, γ) = e^{-i m' α} d^j_{m'm}(β) e^{-i m γ}`
/// for `j = 0..=l_max`. With this convention
/// `Y_jm(R⁻¹ r̂) = Σ_{m'} Y_{jm'}(r̂) D^j_{m'm}(R)`.
#[derive(Clone, Debug)]
pub struct WignerD<T> {
    l_max: usize,
    offsets: Vec<usize>,
    small: Vec<T>,
    alpha: T,
    gamma: T,
}

impl<T: Real> WignerD<T> {
    pub fn new(l_max: usize, alpha: T, beta: T, gamma: T) -> Self {
        let lnf = ln_factorials::<T>(2 * l_max + 2);
        let mut offsets = Vec::with_capacity(l_max + 2);
        let mut small = Vec::new();
        for j in 0..=l_max as i64 {
            offsets.push(small.len());
            let dim = (2 * j + 1) as usize;
            let base = small.len();
            small.resize(base + dim * dim, T::zero());
            // d^j_{m'm} = (-1)^{m-m'} d^j_{mm'} = d^j_{-m,-m'}
            for mp in -j..=j {
                for m in mp..=j {
                    let v = small_d_element(j, mp, m, beta, &lnf);
                    small[base + (mp + j) as usize * dim + (m + j) as usize] = v;
                    small[base + (m + j) as usize * dim + (mp + j) as usize] = v * parity::<T>(m - mp);
                }
            }
        }
        offsets.push(small.len());
        Self { l_max, offsets, small, alpha, gamma }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    #[inline]
    pub fn small_d(&self, j: i64, mp: i64, m: i64) -> T {
        let dim = (2 * j + 1) as usize;
        self.small[self.offsets[j as usize] + (mp + j) as usize * dim + (m + j) as usize]
    }

    #[inline]
    pub fn get(&self, j: i64, mp: i64, m: i64) -> Complex<T> {
        let ph = -(T::of_int(mp) * self.alpha + T::of_int(m) * self.gamma);
        let (s, co) = ph.sin_cos();
        c(co, s) * self.small_d(j, mp, m)
    }

    /// Phase factor `e^{-i m α}`.
    #[inline]
    pub fn alpha_phase(&self, m: i64) -> Complex<T> {
        let (s, co) = (-(T::of_int(m) * self.alpha)).sin_cos();
        c(co, s)
    }

    /// Phase factor `e^{-i m γ}`.
    #[inline]
    pub fn gamma_phase(&self, m: i64) -> Complex<T> {
        let (s, co) = (-(T::of_int(m) * self.gamma)).sin_cos();
        c(co, s)
    }
}
