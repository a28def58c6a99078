//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hotspot::em::SPEED_OF_LIGHT;
use num_complex::Complex;

pub mod entanglement;

pub type C = Complex<f64>;

/// Power series of `j_n(z) (2n+1)!! / z^n`.
pub fn sj(n: usize, z: C) -> C {
    let q = -z * z * 0.5;
    let (mut term, mut sum) = (C::new(1.0, 0.0), C::new(1.0, 0.0));
    for k in 1..200 {
        term = term * q / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Power series of `−y_n(z) z^{n+1} / (2n−1)!!`.
pub fn sy(n: usize, z: C) -> C {
    let q = -z * z * 0.5;
    let (mut term, mut sum) = (C::new(1.0, 0.0), C::new(1.0, 0.0));
    for k in 1..200 {
        term = term * q / (k as f64 * (2 * k as i64 - 1 - 2 * n as i64) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() && k > n {
            break;
        }
    }
    sum
}

pub fn ln_dfact(n: i64) -> f64 {
    (1..=n).rev().step_by(2).map(|k| (k as f64).ln()).sum()
}

/// `h_n(z) (z^{n+1} / (2n−1)!!)`.
pub fn hs(n: usize, z: C) -> C {
    let ln_u = (2 * n + 1) as f64 * z.ln() - C::new(ln_dfact(2 * n as i64 + 1) + ln_dfact(2 * n as i64 - 1), 0.0);
    ln_u.exp() * sj(n, z) - C::new(0.0, 1.0) * sy(n, z)
}

/// Scaled Mie quotients: `a_n = u_n(x) · fa`, `b_n = u_n(x) · fb`, `u_n(x) = x^{2n+1}/((2n+1)!!(2n−1)!!)`.
pub fn mie_scaled(n: usize, x: f64, m: C) -> (C, C) {
    let xc = C::new(x, 0.0);
    let mx = m * x;
    let nf = n as f64;
    let jx = sj(n, xc);
    let jmx = sj(n, mx);
    let djx = (2.0 * nf + 1.0) * sj(n - 1, xc) - nf * jx;
    let djmx = (2.0 * nf + 1.0) * sj(n - 1, mx) - nf * jmx;
    let hx = hs(n, xc);
    let dhx = xc * xc * hs(n - 1, xc) / (2.0 * nf - 1.0) - nf * hx;
    let fa = (m * m * jmx * djx - jx * djmx) / (m * m * jmx * dhx - hx * djmx);
    let fb = (jmx * djx - jx * djmx) / (jmx * dhx - hx * djmx);
    (fa, fb)
}

/// Normalized decay rates `(radial, tangential)` of a dipole at distance
/// `r` from the centre of a sphere of radius `a`.
pub fn sphere_rates(a: f64, r: f64, eps: C, omega: f64, n_max: usize) -> (f64, f64) {
    let k = omega / SPEED_OF_LIGHT;
    let (x, y) = (k * a, k * r);
    let yc = C::new(y, 0.0);
    let m = eps.sqrt();
    let (mut perp, mut par) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
    for n in 1..=n_max {
        let nf = n as f64;
        let (fa, fb) = mie_scaled(n, x, m);
        // u_n(x) Q_n(y)² = (x/y)^{2n+1} / ((2n+1) y)
        let w = (x / y).powi(2 * n as i32 + 1) / ((2.0 * nf + 1.0) * y);
        let h = hs(n, yc);
        let dxi = yc * yc * hs(n - 1, yc) / (2.0 * nf - 1.0) - nf * h;
        let t_perp = fa * w * h * h / (y * y) * (nf * (nf + 1.0) * (2.0 * nf + 1.0));
        let t_par = w * (fb * h * h + fa * dxi * dxi / (y * y)) * (2.0 * nf + 1.0);
        perp += t_perp;
        par += t_par;
        if n > 5 && t_perp.norm() < 1e-15 * perp.norm() && t_par.norm() < 1e-15 * par.norm() {
            break;
        }
    }
    (1.0 - 1.5 * perp.re, 1.0 - 0.75 * par.re)
}

/// xorshift64, uniform in `[-1, 1)`.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn unit(&mut self) -> f64 {
        0.5 * (self.next() + 1.0)
    }
}
