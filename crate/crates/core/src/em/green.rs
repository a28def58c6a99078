//! Dyadic Green tensor of a sphere cluster in a homogeneous host.

use super::{wavenumber, ClusterSystem, EmError, SolverOptions, SphereCluster};
use crate::numerics::{CMat3, CVec3, Real, Vec3};
use num_complex::Complex;

#[derive(Clone, Debug)]
pub struct GreenTensorValue<T> {
    /// 1/m. At coincident points the divergent real part of the free term is
    /// omitted; the imaginary part is exact.
    pub g: CMat3<T>,
    pub r: Vec3<T>,
    pub r_src: Vec3<T>,
    pub omega: T,
}

/// Closed-form free-space dyadic Green function, `r ≠ r_src`.
///
/// For a real wavenumber the imaginary part is assembled from `j₀(kR)` and
/// `j₁(kR)/kR`, which stay accurate as `R → 0`.
pub fn free_green<T: Real>(k: Complex<T>, r: &Vec3<T>, r_src: &Vec3<T>) -> Result<CMat3<T>, EmError> {
    let d = *r - *r_src;
    let dist = d.norm();
    if dist == T::zero() {
        return Err(crate::numerics::NumericsError::Domain("free Green tensor is singular at coincident points".into()).into());
    }
    let u = d * (T::one() / dist);
    let i = Complex::new(T::zero(), T::one());
    let kr = k * dist;
    let one = Complex::new(T::one(), T::zero());
    let three = T::lit(3.0);
    let (a, b, pre) = if k.im == T::zero() {
        let x = kr.re;
        let (sx, cx) = x.sin_cos();
        let (j0, j1x) = if x.abs() < T::lit(0.05) {
            let x2 = x * x;
            (
                T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0) - x2 * x2 * x2 / T::lit(5040.0),
                T::one() / three - x2 / T::lit(30.0) + x2 * x2 / T::lit(840.0) - x2 * x2 * x2 / T::lit(45360.0),
            )
        } else {
            (sx / x, (sx / (x * x) - cx / x) / x)
        };
        let (y0, y1x) = (-cx / x, (-cx / (x * x) - sx / x) / x);
        (
            Complex::new(-y0 + y1x, j0 - j1x),
            Complex::new(y0 - three * y1x, three * j1x - j0),
            Complex::new(k.re / (T::lit(4.0) * T::PI()), T::zero()),
        )
    } else {
        (
            one + i / kr - one / (kr * kr),
            -one - i * three / kr + one * three / (kr * kr),
            (i * kr).exp() / (T::lit(4.0) * T::PI() * dist),
        )
    };
    let ua = u.as_array();
    let mut g = CMat3::zero();
    for p in 0..3 {
        for q in 0..3 {
            let delta = if p == q { a } else { Complex::new(T::zero(), T::zero()) };
            g.0[p][q] = (delta + b * (ua[p] * ua[q])) * pre;
        }
    }
    Ok(g)
}

/// `Im G_free(r, r) = (k / 6π) I` with `k = ω √ε_host / c` (real host index).
pub fn free_green_imag_coincident<T: Real>(omega: T, eps_host: Complex<T>) -> T {
    wavenumber(omega, eps_host).re / (T::lit(6.0) * T::PI())
}

/// `G_scatter(r, r_src) · p`.
pub fn scattered_green_column<T: Real>(
    sys: &ClusterSystem<T>,
    r: &Vec3<T>,
    r_src: &Vec3<T>,
    p: &CVec3<T>,
) -> Result<CVec3<T>, EmError> {
    if sys.geometry().sphere_count() == 0 {
        return Ok(CVec3::zero());
    }
    let src = sys.dipole_source(r_src, p)?;
    let sol = sys.solve(&src)?;
    sys.scattered_field(&sol.beta, r)
}

/// Total Green tensor `G_free + G_scatter`, one solve per column.
pub fn green_tensor<T: Real>(
    cluster: &SphereCluster,
    r: &Vec3<T>,
    r_src: &Vec3<T>,
    omega: T,
) -> Result<GreenTensorValue<T>, EmError> {
    cluster.check_exterior(&r.cast())?;
    cluster.check_exterior(&r_src.cast())?;
    let sys = ClusterSystem::for_cluster(cluster, omega, SolverOptions::default())?;
    let eps_host = cluster.host.permittivity(omega)?;
    let k = sys.wavenumber();
    let mut g = if (*r - *r_src).norm() == T::zero() {
        let im = free_green_imag_coincident(omega, eps_host);
        CMat3::identity().scale(Complex::new(T::zero(), im))
    } else {
        free_green(k, r, r_src)?
    };
    let units = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
    for (q, e) in units.iter().enumerate() {
        let col = scattered_green_column(&sys, r, r_src, &e.to_complex())?;
        for p in 0..3 {
            g.0[p][q] = g.0[p][q] + col[p];
        }
    }
    Ok(GreenTensorValue { g, r: *r, r_src: *r_src, omega })
}
