use super::{c, cr, CVec3, Real};
use num_complex::Complex;

/// Orthonormal `Y_nm(θ, φ)` for all `0 ≤ n ≤ l_max`, `|m| ≤ n`, at one direction.
#[derive(Clone, Debug)]
pub struct SphericalHarmonics<T> {
    l_max: usize,
    values: Vec<Complex<T>>,
}

impl<T: Real> SphericalHarmonics<T> {
    pub fn new(l_max: usize, theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let size = (l_max + 1) * (l_max + 1);
        // normalized associated Legendre functions for m ≥ 0, Condon–Shortley phase
        let mut p = vec![T::zero(); size];
        let at = |n: usize, m: usize| n * n + n + m;
        let four_pi = T::lit(4.0) * T::PI();
        p[0] = T::one() / four_pi.sqrt();
        for m in 1..=l_max {
            let f = (T::of_usize(2 * m + 1) / T::of_usize(2 * m)).sqrt();
            p[at(m, m)] = -f * st * p[at(m - 1, m - 1)];
        }
        for m in 0..l_max {
            p[at(m + 1, m)] = T::of_usize(2 * m + 3).sqrt() * ct * p[at(m, m)];
        }
        for m in 0..=l_max {
            for n in (m + 2)..=l_max {
                let a = |n: usize| {
                    let nn = T::of_usize(n * n);
                    let mm = T::of_usize(m * m);
                    ((T::lit(4.0) * nn - T::one()) / (nn - mm)).sqrt()
                };
                p[at(n, m)] = a(n) * (ct * p[at(n - 1, m)] - p[at(n - 2, m)] / a(n - 1));
            }
        }
        let mut values = vec![cr(T::zero()); size];
        for n in 0..=l_max {
            for m in 0..=n {
                let mf = T::of_usize(m);
                let (s, co) = (mf * phi).sin_cos();
                let v = c(co, s) * p[at(n, m)];
                values[at(n, m)] = v;
                if m > 0 {
                    let sign = if m % 2 == 0 { T::one() } else { -T::one() };
                    values[n * n + n - m] = v.conj() * sign;
                }
            }
        }
        Self { l_max, values }
    }

    pub fn from_direction(l_max: usize, dir: &super::Vec3<T>) -> Self {
        let (_, theta, phi) = dir.to_spherical();
        Self::new(l_max, theta, phi)
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `Y_nm`, zero outside `|m| ≤ n ≤ l_max`.
    #[inline]
    pub fn get(&self, n: i64, m: i64) -> Complex<T> {
        if n < 0 || m.abs() > n || n as usize > self.l_max {
            return cr(T::zero());
        }
        self.values[(n * n + n + m) as usize]
    }
}

/// Spherical basis vector `e_q`, `q ∈ {-1, 0, 1}`.
pub fn spherical_unit<T: Real>(q: i64) -> CVec3<T> {
    let s = T::FRAC_1_SQRT_2();
    let z = T::zero();
    match q {
        1 => CVec3::new(c(-s, z), c(z, -s), cr(z)),
        0 => CVec3::new(cr(z), cr(z), cr(T::one())),
        -1 => CVec3::new(c(s, z), c(z, -s), cr(z)),
        _ => panic!("spherical basis index out of range: {q}"),
    }
}

/// Clebsch–Gordan coefficient `⟨j1, m−q; 1, q | j, m⟩` for `j ∈ {j1−1, j1, j1+1}`.
pub fn cg_rank1<T: Real>(j1: i64, m: i64, q: i64, j: i64) -> T {
    let m1 = m - q;
    if j1 < 0 || m1.abs() > j1 || m.abs() > j || q.abs() > 1 || j < 0 {
        return T::zero();
    }
    let f = |x: i64| T::of_int(x);
    let sq = |num: i64, den: i64| {
        if den == 0 {
            T::zero()
        } else {
            (f(num) / f(den)).sqrt()
        }
    };
    if j == j1 + 1 {
        let d = (2 * j1 + 1) * (2 * j1 + 2);
        match q {
            1 => sq((j1 + m) * (j1 + m + 1), d),
            0 => sq((j1 - m + 1) * (j1 + m + 1), (2 * j1 + 1) * (j1 + 1)),
            _ => sq((j1 - m) * (j1 - m + 1), d),
        }
    } else if j == j1 {
        if j1 == 0 {
            return T::zero();
        }
        let d = 2 * j1 * (j1 + 1);
        match q {
            1 => -sq((j1 + m) * (j1 - m + 1), d),
            0 => f(m) / f(j1 * (j1 + 1)).sqrt(),
            _ => sq((j1 - m) * (j1 + m + 1), d),
        }
    } else if j == j1 - 1 {
        let d = 2 * j1 * (2 * j1 + 1);
        match q {
            1 => sq((j1 - m) * (j1 - m + 1), d),
            0 => -sq((j1 - m) * (j1 + m), j1 * (2 * j1 + 1)),
            _ => sq((j1 + m + 1) * (j1 + m), d),
        }
    } else {
        T::zero()
    }
}

/// Vector spherical harmonic `Y^l_{j m}(r̂) = Σ_q ⟨l, m−q; 1, q | j, m⟩ Y_{l,m−q} e_q`.
pub fn vsh<T: Real>(harm: &SphericalHarmonics<T>, l: i64, j: i64, m: i64) -> CVec3<T> {
    let mut out = CVec3::zero();
    for q in -1..=1 {
        let cg = cg_rank1::<T>(l, m, q, j);
        if cg == T::zero() {
            continue;
        }
        let y = harm.get(l, m - q);
        out += spherical_unit::<T>(q).scale(y * cg);
    }
    out
}
