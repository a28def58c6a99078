//! Plane-wave illumination: total field at points and on planar grids.

use super::{ClusterSystem, EmError, PlaneWave, SolverOptions, SphereCluster};
use crate::numerics::{CVec3, Real, Vec3};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Grid value for points inside a sphere.
pub const MASKED: f64 = -1.0;

/// Rectangular patch `center + s·u + t·v`, `s ∈ [−half_u, half_u]`,
/// `t ∈ [−half_v, half_v]`, with `u ⊥ v` unit vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub center: Vec3<f64>,
    pub u: Vec3<f64>,
    pub v: Vec3<f64>,
    pub half_u: f64,
    pub half_v: f64,
}

impl PlaneSpec {
    /// The `xz` plane through the centroid of the sphere centres, wide enough
    /// to show every sphere plus `margin` metres.
    pub fn xz_through(cluster: &SphereCluster, margin: f64) -> Self {
        let n = cluster.spheres.len().max(1) as f64;
        let centroid = cluster.spheres.iter().fold(Vec3::zero(), |a, s| a + s.center) * (1.0 / n);
        let reach = |axis: fn(&Vec3<f64>) -> f64| {
            cluster
                .spheres
                .iter()
                .map(|s| (axis(&s.center) - axis(&centroid)).abs() + s.radius)
                .fold(0.0, f64::max)
                + margin
        };
        Self { center: centroid, u: Vec3::unit_x(), v: Vec3::unit_z(), half_u: reach(|c| c.x), half_v: reach(|c| c.z) }
    }

    /// Grid point `(i, j)` of a `resolution × resolution` sampling.
    pub fn point(&self, i: usize, j: usize, resolution: usize) -> Vec3<f64> {
        let (s, t) = self.coords(i, j, resolution);
        self.center + self.u * s + self.v * t
    }

    /// In-plane coordinates `(s, t)` of grid point `(i, j)`.
    pub fn coords(&self, i: usize, j: usize, resolution: usize) -> (f64, f64) {
        let f = |k: usize, half: f64| {
            if resolution < 2 {
                0.0
            } else {
                -half + 2.0 * half * k as f64 / (resolution - 1) as f64
            }
        };
        (f(i, self.half_u), f(j, self.half_v))
    }

    fn validate(&self) -> Result<(), EmError> {
        let bad = |m: &str| Err(EmError::InvalidCluster(format!("plane spec: {m}")));
        if (self.u.norm() - 1.0).abs() > 1e-12 || (self.v.norm() - 1.0).abs() > 1e-12 {
            return bad("axes must be unit vectors");
        }
        if self.u.dot(&self.v).abs() > 1e-12 {
            return bad("axes must be orthogonal");
        }
        if !(self.half_u >= 0.0 && self.half_v >= 0.0) {
            return bad("half widths must be non-negative");
        }
        Ok(())
    }
}

/// `|E|` on a square grid, row-major with `j` (along `v`) as the row index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub plane: PlaneSpec,
    pub resolution: usize,
    pub omega: f64,
    /// `|E|` in V/m, or [`MASKED`].
    pub values: Vec<f64>,
}

impl FieldMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    /// Grid indices and value of the largest unmasked entry.
    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != MASKED && v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k % self.resolution, k / self.resolution, *v))
    }
}

fn incident<T: Real>(pw: &PlaneWave, k: Complex<T>, r: &Vec3<T>) -> CVec3<T> {
    let dir: Vec3<T> = pw.direction.cast();
    let phase = (Complex::new(T::zero(), T::one()) * k * dir.dot(r)).exp() * T::lit(pw.amplitude);
    pw.polarization.cast::<T>().to_complex().scale(phase)
}

/// Solved plane-wave problem, reusable for many field points.
pub struct Illumination<T> {
    system: Option<ClusterSystem<T>>,
    beta: Vec<Vec<Complex<T>>>,
    k: Complex<T>,
}

impl<T: Real> Illumination<T> {
    pub fn solve(cluster: &SphereCluster, pw: &PlaneWave) -> Result<Self, EmError> {
        pw.validate()?;
        let omega = T::lit(pw.omega);
        let eps_host = cluster.host.permittivity(omega)?;
        let k = super::wavenumber(omega, eps_host);
        if cluster.spheres.is_empty() {
            return Ok(Self { system: None, beta: Vec::new(), k });
        }
        let sys = ClusterSystem::for_cluster(cluster, omega, SolverOptions::default())?;
        let amp = T::lit(pw.amplitude);
        let alpha: Vec<Vec<Complex<T>>> = sys
            .plane_wave_source(&pw.direction.cast(), &pw.polarization.cast::<T>().to_complex())
            .into_iter()
            .map(|a| a.into_iter().map(|v| v * amp).collect())
            .collect();
        let sol = sys.solve(&alpha)?;
        Ok(Self { system: Some(sys), beta: sol.beta, k })
    }

    pub fn scattered(&self, r: &Vec3<T>) -> Result<CVec3<T>, EmError> {
        match &self.system {
            Some(sys) => sys.scattered_field(&self.beta, r),
            None => Ok(CVec3::zero()),
        }
    }
}

/// Total field (incident plus scattered) from an already solved illumination.
pub fn total_field_with<T: Real>(ill: &Illumination<T>, pw: &PlaneWave, r: &Vec3<T>) -> Result<CVec3<T>, EmError> {
    Ok(incident(pw, ill.k, r) + ill.scattered(r)?)
}

/// Total electric field at `r` (outside every sphere) under plane-wave illumination.
pub fn scattered_field<T: Real>(cluster: &SphereCluster, pw: &PlaneWave, r: &Vec3<T>) -> Result<CVec3<T>, EmError> {
    cluster.check_exterior(&r.cast())?;
    let ill = Illumination::solve(cluster, pw)?;
    total_field_with(&ill, pw, r)
}

/// `|E|` over a `resolution × resolution` grid; points inside spheres hold [`MASKED`].
pub fn field_map(cluster: &SphereCluster, pw: &PlaneWave, plane: &PlaneSpec, resolution: usize) -> Result<FieldMap, EmError> {
    plane.validate()?;
    let ill = Illumination::<f64>::solve(cluster, pw)?;
    let values = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let r = plane.point(k % resolution, k / resolution, resolution);
            if cluster.containing(&r).is_some() {
                return Ok(MASKED);
            }
            Ok(total_field_with(&ill, pw, &r)?.norm())
        })
        .collect::<Result<Vec<f64>, EmError>>()?;
    Ok(FieldMap { plane: plane.clone(), resolution, omega: pw.omega, values })
}
