//! Spherical Bessel `j_n` and outgoing Hankel `h_n^(1)` of complex argument.
//!
//! Both families are produced as sequences of natural logarithms so callers
//! that only need ratios (the scaled T-matrix unknowns) never overflow.
//! `j_n` comes from the downward ratio recurrence anchored on a directly
//! evaluated low order; `h_n^(1)` from upward recurrence of the ratio
//! `h_n / h_{n-1}`.

use super::{c, cr, NumericsError, Real};
use num_complex::Complex;

/// Extra orders added above `max(n_max, |z|)` before starting the downward
/// ratio recurrence for `j_n`.
pub const DOWNWARD_START_PAD: usize = 40;

/// Fraction of `|z|` added to the downward start order.
pub const DOWNWARD_START_SCALE: f64 = 1.2;

/// Below this `|z|` the `j_0` anchor is always used (no zeros nearby).
pub const SMALL_ARGUMENT: f64 = 1.0;

/// Beyond this `|Im z|` trigonometric functions are evaluated in factored
/// exponential form to avoid overflow.
const LARGE_IMAG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BesselKind {
    /// Regular `j_n`.
    J,
    /// Outgoing Hankel `h_n^(1) = j_n + i y_n`.
    H1,
}

/// `ln(k!!)` for `k ≥ -1`, with `(-1)!! = 0!! = 1`.
pub fn ln_double_factorial<T: Real>(k: i64) -> T {
    let mut acc = T::zero();
    let mut j = k;
    while j > 1 {
        acc = acc + T::of_int(j).ln();
        j -= 2;
    }
    acc
}

/// `ln sin z` and `ln(sin z - z cos z)` evaluated without overflow.
fn ln_sin_and_j1_numerator<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let i = c(T::zero(), T::one());
    let two = T::lit(2.0);
    if z.im > T::lit(LARGE_IMAG) {
        // sin z = e^{-iz}(e^{2iz} - 1)/(2i), cos z = e^{-iz}(e^{2iz} + 1)/2
        let e2 = (i * z * two).exp();
        let pref = -i * z;
        let s = (e2 - cr(T::one())) / (i * two);
        let co = (e2 + cr(T::one())) / two;
        (pref + s.ln(), pref + (s - z * co).ln())
    } else if z.im < -T::lit(LARGE_IMAG) {
        let e2 = (-i * z * two).exp();
        let pref = i * z;
        let s = (cr(T::one()) - e2) / (i * two);
        let co = (cr(T::one()) + e2) / two;
        (pref + s.ln(), pref + (s - z * co).ln())
    } else {
        let s = z.sin();
        (s.ln(), (s - z * z.cos()).ln())
    }
}

fn check_range<T: Real>(v: &[Complex<T>], what: &str) -> Result<(), NumericsError> {
    if v.iter().any(|x| x.re.is_nan() || x.im.is_nan()) {
        return Err(NumericsError::Range(format!("{what}: NaN encountered")));
    }
    Ok(())
}

/// `ln j_n(z)` for `n = 0..=n_max`. Exact zeros (`z = 0`, `n ≥ 1`) are
/// reported as `-∞` real parts.
pub fn ln_sph_j_seq<T: Real>(n_max: usize, z: Complex<T>) -> Result<Vec<Complex<T>>, NumericsError> {
    let mut out = vec![cr(T::zero()); n_max + 1];
    let az = z.norm();
    if !(az.is_finite()) {
        return Err(NumericsError::Domain("non-finite argument".into()));
    }
    if az == T::zero() {
        for v in out.iter_mut().skip(1) {
            *v = cr(T::neg_infinity());
        }
        return Ok(out);
    }
    if az < T::lit(1e-3) && n_max > 0 {
        // leading term of the power series is exact to O(z²) and keeps the
        // logarithm meaningful where ratios underflow
        return small_argument_ln_j(n_max, z);
    }
    let az_f = az.to_f64().unwrap_or(f64::MAX);
    let start = n_max.max(az_f as usize)
        + (DOWNWARD_START_SCALE * az_f).ceil() as usize
        + DOWNWARD_START_PAD;
    // ratios r_n = j_n / j_{n-1}
    let mut ratios = vec![cr(T::zero()); n_max + 1];
    let mut r = cr(T::zero());
    for n in (1..=start).rev() {
        let denom = cr(T::of_usize(2 * n + 1)) - z * r;
        r = z / denom;
        if n <= n_max {
            ratios[n] = r;
        }
    }
    let (ln_s, ln_j1_num) = ln_sin_and_j1_numerator(z);
    let ln_z = z.ln();
    let ln_j0 = ln_s - ln_z;
    out[0] = ln_j0;
    if n_max == 0 {
        return Ok(out);
    }
    let ln_j1 = ln_j1_num - ln_z * T::lit(2.0);
    let use_j1 = az >= T::lit(SMALL_ARGUMENT) && ln_j0.re < ln_j1.re;
    if use_j1 {
        out[1] = ln_j1;
    } else {
        out[1] = ln_j0 + ratios[1].ln();
    }
    for n in 2..=n_max {
        out[n] = out[n - 1] + ratios[n].ln();
    }
    check_range(&out, "spherical Bessel j")?;
    Ok(out)
}

fn small_argument_ln_j<T: Real>(n_max: usize, z: Complex<T>) -> Result<Vec<Complex<T>>, NumericsError> {
    let ln_z = z.ln();
    let z2 = z * z;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        // j_n ≈ z^n/(2n+1)!! · (1 - z²/(2(2n+3)) + z⁴/(8(2n+3)(2n+5)))
        let a = T::of_usize(2 * n + 3);
        let b = T::of_usize(2 * n + 5);
        let corr = cr(T::one()) - z2 / (T::lit(2.0) * a) + z2 * z2 / (T::lit(8.0) * a * b);
        out.push(ln_z * T::of_usize(n) - cr(ln_double_factorial::<T>(2 * n as i64 + 1)) + corr.ln());
    }
    Ok(out)
}

/// `ln h_n^(1)(z)` for `n = 0..=n_max`; `z ≠ 0`.
pub fn ln_sph_h1_seq<T: Real>(n_max: usize, z: Complex<T>) -> Result<Vec<Complex<T>>, NumericsError> {
    if z.norm() == T::zero() {
        return Err(NumericsError::Domain("outgoing Hankel function has a pole at 0".into()));
    }
    if !z.norm().is_finite() {
        return Err(NumericsError::Domain("non-finite argument".into()));
    }
    if z.im < T::zero() {
        return ln_h1_lower_half_plane(n_max, z);
    }
    let i = c(T::zero(), T::one());
    let mut out = Vec::with_capacity(n_max + 1);
    // h_0 = -i e^{iz}/z
    let ln_h0 = (-i).ln() + i * z - z.ln();
    out.push(ln_h0);
    let zinv = cr(T::one()) / z;
    let mut s = zinv - i;
    for n in 1..=n_max {
        if n > 1 {
            s = zinv * T::of_usize(2 * n - 1) - cr(T::one()) / s;
        }
        let prev = out[n - 1];
        out.push(prev + s.ln());
    }
    check_range(&out, "spherical Hankel h1")?;
    Ok(out)
}

/// Below the real axis upward recurrence of `h^(1)` is not dominant, so use
/// `h^(1)(z) = 2 j(z) - conj(h^(1)(conj z))`.
fn ln_h1_lower_half_plane<T: Real>(n_max: usize, z: Complex<T>) -> Result<Vec<Complex<T>>, NumericsError> {
    let lj = ln_sph_j_seq(n_max, z)?;
    let lh2 = ln_sph_h1_seq(n_max, z.conj())?;
    let two = T::lit(2.0).ln();
    Ok(lj
        .iter()
        .zip(lh2.iter())
        .map(|(a, b)| {
            let a = a + two;
            let b = b.conj();
            let s = a.re.max(b.re);
            let v = (a - s).exp() - (b - s).exp();
            v.ln() + s
        })
        .collect())
}

fn exp_checked<T: Real>(ln: Complex<T>, what: &str) -> Result<Complex<T>, NumericsError> {
    if ln.re == T::neg_infinity() {
        return Ok(cr(T::zero()));
    }
    if ln.re > T::max_value().ln() {
        return Err(NumericsError::Range(format!("{what} overflows (ln|f| = {})", ln.re)));
    }
    Ok(ln.exp())
}

/// Values `f_0..=f_{n_max}` of the requested kind.
pub fn sph_bessel_seq<T: Real>(
    kind: BesselKind,
    n_max: usize,
    z: Complex<T>,
) -> Result<Vec<Complex<T>>, NumericsError> {
    let ln = match kind {
        BesselKind::J => ln_sph_j_seq(n_max, z)?,
        BesselKind::H1 => ln_sph_h1_seq(n_max, z)?,
    };
    let name = match kind {
        BesselKind::J => "j_n",
        BesselKind::H1 => "h_n",
    };
    ln.into_iter().map(|l| exp_checked(l, name)).collect()
}

/// Single value `j_n(z)` or `h_n^(1)(z)`.
pub fn sph_bessel<T: Real>(kind: BesselKind, n: usize, z: Complex<T>) -> Result<Complex<T>, NumericsError> {
    Ok(sph_bessel_seq(kind, n, z)?[n])
}

/// Value and derivative `(f_n(z), f_n'(z))`.
pub fn sph_bessel_pair<T: Real>(
    kind: BesselKind,
    n: usize,
    z: Complex<T>,
) -> Result<(Complex<T>, Complex<T>), NumericsError> {
    let seq = sph_bessel_seq(kind, n + 1, z)?;
    let d = if n == 0 {
        -seq[1]
    } else if z.norm() == T::zero() {
        // only j_1 has a nonzero slope at the origin
        if n == 1 {
            cr(T::one() / T::lit(3.0))
        } else {
            cr(T::zero())
        }
    } else {
        seq[n - 1] - seq[n] * T::of_usize(n + 1) / z
    };
    Ok((seq[n], d))
}

/// Logarithmic derivative `D_n(z) = ψ_n'(z)/ψ_n(z)` of the Riccati–Bessel
/// function `ψ_n = z j_n`, for `n = 0..=n_max`, by downward recurrence.
pub fn riccati_log_derivative<T: Real>(n_max: usize, z: Complex<T>) -> Vec<Complex<T>> {
    let az = z.norm().to_f64().unwrap_or(0.0);
    let start = n_max.max(az.ceil() as usize) + 16;
    let mut d = cr(T::zero());
    let mut out = vec![cr(T::zero()); n_max + 1];
    for n in (1..=start).rev() {
        let nz = cr(T::of_usize(n)) / z;
        d = nz - cr(T::one()) / (d + nz);
        if n - 1 <= n_max {
            out[n - 1] = d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn rel(a: Complex<f64>, b: Complex<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    // reference values from a 40-digit evaluation of the half-integer
    // cylindrical functions
    const REFERENCE: &[(usize, f64, f64, f64, f64, f64, f64)] = &[
        (5, 2.7, 0.3, 0.0094805059481731317, 0.0050387677902291459, -1.9019557558176213, -3.0535887020005315),
        (0, 1.0, 0.0, 0.84147098480789651, 0.0, 0.84147098480789651, -0.54030230586813972),
        (30, 3.0, 0.5, 3.5189856796659899e-29, -1.5869770310657777e-28, 3.0918417221573409e+25, -1.2411266798042504e+25),
        (80, 500.0, 0.0, -0.0012933407951648948, 0.0, -0.0012933407951648948, 0.0015427700058573196),
        (10, 0.01, 0.0, 7.2730761345037887e-31, 0.0, 7.2730761345037887e-31, -6.5473079797378363e+30),
        (3, 40.0, 30.0, -98974421484.861145, -9936425646.9353747, -3.6302920138183477e-16, 1.9789386615082455e-15),
        (7, 3.14159, 0.0, 0.0011094784628997422, 0.0, 0.0011094784628997422, -21.13221763827809),
        (40, 0.2, 0.1, 1.4079381520349293e-87, -4.4153843061474206e-88, -5.9518654060281807e+84, -3.6941570492989019e+85),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(n, zr, zi, jr, ji, hr, hi) in REFERENCE {
            let z = cc(zr, zi);
            let j = sph_bessel(BesselKind::J, n, z).unwrap();
            let h = sph_bessel(BesselKind::H1, n, z).unwrap();
            assert!(rel(j, cc(jr, ji)) < 1e-12, "j_{n}({z}) = {j}, rel {}", rel(j, cc(jr, ji)));
            assert!(rel(h, cc(hr, hi)) < 1e-12, "h_{n}({z}) = {h}, rel {}", rel(h, cc(hr, hi)));
        }
    }

    #[test]
    fn j0_of_one() {
        let v = sph_bessel(BesselKind::J, 0, cc(1.0, 0.0)).unwrap();
        assert!((v.re - 0.8414709848078965).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn j_vanishes_at_origin_for_positive_order() {
        let v = sph_bessel_seq(BesselKind::J, 5, cc(0.0, 0.0)).unwrap();
        assert_eq!(v[0], cc(1.0, 0.0));
        assert!(v[1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn hankel_pole_is_domain_error() {
        assert!(matches!(
            sph_bessel(BesselKind::H1, 2, cc(0.0, 0.0)),
            Err(NumericsError::Domain(_))
        ));
    }

    #[test]
    fn overflow_is_range_error() {
        let r = sph_bessel(BesselKind::H1, 200, cc(1e-3, 0.0));
        assert!(matches!(r, Err(NumericsError::Range(_))), "{r:?}");
    }

    #[test]
    fn wronskian_at_reference_point() {
        let z = cc(2.7, 0.3);
        let (j, dj) = sph_bessel_pair(BesselKind::J, 5, z).unwrap();
        let (h, dh) = sph_bessel_pair(BesselKind::H1, 5, z).unwrap();
        let w = j * dh - dj * h;
        let expected = Complex::<f64>::i() / (z * z);
        assert!(rel(w, expected) < 1e-12);
    }

    #[test]
    fn wronskian_over_sampled_range() {
        let mut worst: f64 = 0.0;
        for &mag in &[0.01, 0.1, 0.7, 2.0, 9.0, 30.0, 120.0, 500.0] {
            for &arg in &[-0.785, -0.3, 0.0, 0.4, 0.785] {
                let z = Complex::from_polar(mag, arg);
                let js = sph_bessel_seq(BesselKind::J, 61, z);
                let hs = sph_bessel_seq(BesselKind::H1, 61, z);
                let (Ok(js), Ok(hs)) = (js, hs) else { continue };
                for n in 1..=60 {
                    let dj = js[n - 1] - js[n] * (n as f64 + 1.0) / z;
                    let dh = hs[n - 1] - hs[n] * (n as f64 + 1.0) / z;
                    let w = js[n] * dh - dj * hs[n];
                    // below the real axis both terms grow like e^{|Im z|} and the
                    // identity can only hold relative to their size
                    let target = Complex::<f64>::i() / (z * z);
                    let scale = target.norm().max((js[n] * dh).norm() + (dj * hs[n]).norm());
                    let e = (w - target).norm() / scale;
                    worst = worst.max(e);
                }
            }
        }
        assert!(worst < 1e-10, "worst Wronskian deviation {worst}");
    }

    #[test]
    fn downward_j_agrees_with_upward_where_stable() {
        // for n below |z| upward recurrence of j from j_0, j_1 is accurate
        let z = cc(50.0, 0.2);
        let js = sph_bessel_seq(BesselKind::J, 20, z).unwrap();
        let mut a = z.sin() / z;
        let mut b = (z.sin() - z * z.cos()) / (z * z);
        for n in 1..20 {
            let next = b * (2.0 * n as f64 + 1.0) / z - a;
            a = b;
            b = next;
            assert!(rel(b, js[n + 1]) < 1e-10);
        }
    }

    #[test]
    fn riccati_log_derivative_matches_ratio() {
        let z = cc(0.4, 2.1);
        let d = riccati_log_derivative(10, z);
        let js = sph_bessel_seq(BesselKind::J, 11, z).unwrap();
        for n in 1..=10 {
            // ψ_n'/ψ_n = 1/z + j_n'/j_n
            let dj = js[n - 1] - js[n] * (n as f64 + 1.0) / z;
            let expect = 1.0 / z + dj / js[n];
            assert!(rel(d[n], expect) < 1e-11);
        }
    }

    #[test]
    fn double_factorial_logs() {
        assert_eq!(ln_double_factorial::<f64>(-1), 0.0);
        assert!((ln_double_factorial::<f64>(7) - 105f64.ln()).abs() < 1e-14);
        assert!((ln_double_factorial::<f64>(8) - 384f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_precision_is_usable() {
        let v = sph_bessel(BesselKind::J, 2, Complex::new(1.5f32, 0.0)).unwrap();
        assert!((v.re - 0.1273493).abs() < 1e-5);
    }
}
