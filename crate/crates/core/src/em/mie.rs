//! Single-sphere Mie response.
//!
//! `a_n`, `b_n` follow the usual Bohren–Huffman definitions; the sphere's
//! T-matrix is diagonal with `−a_n` on `TM` (N) waves and `−b_n` on `TE` (M)
//! waves. With this sign, a lossless sphere has `a_n` on the circle
//! `|a_n − 1/2| = 1/2`, equivalently `|T + 1/2| = 1/2`.

use super::{wavenumber, EmError};
use crate::numerics::{cr, ln_double_factorial, ln_sph_h1_seq, ln_sph_j_seq, riccati_log_derivative, Real};
use num_complex::Complex;

/// `ln(x^n / (2n+1)!!)`: magnitude of `j_n(x)` for small `x`.
pub fn ln_regular_scale<T: Real>(n: usize, x: T) -> T {
    T::of_usize(n) * x.ln() - ln_double_factorial::<T>(2 * n as i64 + 1)
}

/// `ln((2n−1)!! / x^(n+1))`: magnitude of `h_n(x)` for small `x`.
pub fn ln_outgoing_scale<T: Real>(n: usize, x: T) -> T {
    ln_double_factorial::<T>(2 * n as i64 - 1) - T::of_usize(n + 1) * x.ln()
}

/// Mie orders `1..=n_max` of one sphere at one frequency.
#[derive(Clone, Debug)]
pub struct MieSeries<T> {
    /// `a_n`, index `n` (entry 0 unused); may underflow to zero at high order.
    pub a: Vec<Complex<T>>,
    pub b: Vec<Complex<T>>,
    /// `T_n · s_out(n) / s_reg(n)` for TE and TM, with `s` from
    /// [`ln_regular_scale`] / [`ln_outgoing_scale`] at `x = |k| R`.
    pub t_te_scaled: Vec<Complex<T>>,
    pub t_tm_scaled: Vec<Complex<T>>,
    /// `|k| R`, the argument of the scale factors.
    pub x_scale: T,
}

/// Compute all orders up to `n_max`.
pub fn mie_series<T: Real>(
    radius: T,
    eps_sphere: Complex<T>,
    eps_host: Complex<T>,
    omega: T,
    n_max: usize,
) -> Result<MieSeries<T>, EmError> {
    let k = wavenumber(omega, eps_host);
    let x = k * radius;
    let m = (eps_sphere / eps_host).sqrt();
    let lj = ln_sph_j_seq(n_max, x)?;
    let lh = ln_sph_h1_seq(n_max, x)?;
    let d = riccati_log_derivative(n_max, m * x);
    let xs = k.norm() * radius;
    let zero = cr(T::zero());
    let mut a = vec![zero; n_max + 1];
    let mut b = vec![zero; n_max + 1];
    let mut t_te = vec![zero; n_max + 1];
    let mut t_tm = vec![zero; n_max + 1];
    if eps_sphere == eps_host {
        return Ok(MieSeries { a, b, t_te_scaled: t_te, t_tm_scaled: t_tm, x_scale: xs });
    }
    for n in 1..=n_max {
        let nx = cr(T::of_usize(n)) / x;
        let rj = (lj[n - 1] - lj[n]).exp();
        let rh = (lh[n - 1] - lh[n]).exp();
        let da = d[n] / m + nx;
        let db = d[n] * m + nx;
        let fa = (da - rj) / (da - rh);
        let fb = (db - rj) / (db - rh);
        let ratio = lj[n] - lh[n];
        let r = ratio.exp();
        a[n] = r * fa;
        b[n] = r * fb;
        let scaled = (ratio + cr(ln_outgoing_scale(n, xs) - ln_regular_scale(n, xs))).exp();
        t_tm[n] = -scaled * fa;
        t_te[n] = -scaled * fb;
    }
    Ok(MieSeries { a, b, t_te_scaled: t_te, t_tm_scaled: t_tm, x_scale: xs })
}

/// `(a_n, b_n)` for a single order.
pub fn mie_coefficients<T: Real>(
    radius: T,
    eps_sphere: Complex<T>,
    eps_host: Complex<T>,
    omega: T,
    n: usize,
) -> Result<(Complex<T>, Complex<T>), EmError> {
    assert!(n >= 1, "Mie order starts at 1");
    let s = mie_series(radius, eps_sphere, eps_host, omega, n)?;
    Ok((s.a[n], s.b[n]))
}
