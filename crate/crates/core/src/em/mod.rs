//! Classical electrodynamics of sphere clusters: materials, Mie response,
//! the multiple-scattering solve, Green tensors and plane-wave field maps.

mod cluster;
mod field;
mod green;
mod material;
mod mie;
mod solver;

pub use cluster::{PlaneWave, Sphere, SphereCluster};
pub use field::{field_map, scattered_field, total_field_with, FieldMap, Illumination, PlaneSpec, MASKED};
pub use green::{
    free_green, free_green_imag_coincident, green_tensor, scattered_green_column, GreenTensorValue,
};
pub use material::{Material, MaterialError, TableEntry, HBAR_EV_S, MATERIAL_DIR_ENV, SILVER_TABLE_FILE};
pub use mie::{ln_outgoing_scale, ln_regular_scale, mie_coefficients, mie_series, MieSeries};
pub use solver::{
    solve_cluster, ClusterGeometry, ClusterSystem, Solution, SolverOptions, SolverStrategy,
};

use crate::numerics::{NumericsError, Real};
use num_complex::Complex;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `k = ω √ε / c` on the principal branch (`Im k ≥ 0`).
pub fn wavenumber<T: Real>(omega: T, eps: Complex<T>) -> Complex<T> {
    eps.sqrt() * (omega / T::lit(SPEED_OF_LIGHT))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("point ({:e}, {:e}, {:e}) m lies inside sphere {sphere}", point[0], point[1], point[2])]
    InsideSphere { point: [f64; 3], sphere: usize },
    #[error("spheres {first} and {second} overlap (gap {gap:e} m)")]
    Overlap { first: usize, second: usize, gap: f64 },
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),
    #[error("invalid plane wave: {0}")]
    InvalidPlaneWave(String),
}
