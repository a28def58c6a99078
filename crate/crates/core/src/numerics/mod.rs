//! Special functions, vector spherical wave functions and their translation
//! machinery, plus the small dense linear-algebra kernels the solver needs.
//!
//! Conventions shared by every module in the crate:
//!
//! * time dependence `exp(-i ω t)`, outgoing waves use `h_n^(1)`;
//! * scalar harmonics `Y_nm` are orthonormal on the unit sphere and carry the
//!   Condon–Shortley phase, azimuthal dependence `exp(i m φ)`;
//! * `M_nm = z_n(kr) Y^n_nm(r̂)` and `N_nm = curl(M_nm) / k`, where `Y^l_JM` is
//!   the vector spherical harmonic obtained by coupling `Y_l` with the
//!   spherical unit vectors. Both families are orthonormal over the sphere in
//!   their angular parts.

mod bessel;
mod harmonics;
mod linalg;
mod translation;
mod vec3;
mod vswf;
mod wigner;

pub use bessel::{
    ln_double_factorial, ln_sph_h1_seq, ln_sph_j_seq, riccati_log_derivative, sph_bessel,
    sph_bessel_pair, sph_bessel_seq, BesselKind,
};
pub use harmonics::{cg_rank1, spherical_unit, vsh, SphericalHarmonics};
pub use linalg::{gmres, hermitian_eigen, CMatrix, GmresOutcome, LuFactors};
pub use translation::{
    axial_translation, rotate_coefficients, scalar_translation, shared_axial_three_j, translation, AxialThreeJ,
    AxialTranslation, RotatedTranslation, Rotation, TranslationKind, TranslationMatrix,
};
pub use vec3::{CMat3, CVec3, Vec3};
pub use vswf::{
    dipole_source_coefficients, expansion_value, plane_wave_coefficients, vswf_eval, vswf_field,
    Basis, MultipoleIndex, Polarization, WaveKind,
};
pub use wigner::{wigner3j_range, wigner_small_d, WignerD};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the whole library is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("index representable")
    }

    #[inline]
    fn of_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Errors raised by the numerical substrate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("value out of floating-point range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("linear system is singular or badly conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("iterative solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
}

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `i^p` for any integer power.
#[inline]
pub(crate) fn i_pow<T: Real>(p: i64) -> Complex<T> {
    match p.rem_euclid(4) {
        0 => cr(T::one()),
        1 => c(T::zero(), T::one()),
        2 => cr(-T::one()),
        _ => c(T::zero(), -T::one()),
    }
}

#[inline]
pub(crate) fn parity<T: Real>(p: i64) -> T {
    if p.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}
