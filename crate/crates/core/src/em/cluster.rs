use super::{EmError, Material};
use crate::numerics::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    /// Centre in metres.
    pub center: Vec3<f64>,
    /// Radius in metres.
    pub radius: f64,
    pub material: Material,
}

/// Spheres in a homogeneous host, with the multipole truncation used for
/// every sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereCluster {
    pub spheres: Vec<Sphere>,
    pub host: Material,
    pub l_max: usize,
}

/// Relative tolerance used when deciding that sphere centres share a line.
const COLLINEAR_TOL: f64 = 1e-12;

impl SphereCluster {
    pub fn new(spheres: Vec<Sphere>, host: Material, l_max: usize) -> Result<Self, EmError> {
        let c = Self { spheres, host, l_max };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(l_max: usize) -> Self {
        Self { spheres: Vec::new(), host: Material::vacuum(), l_max }
    }

    pub fn with_l_max(&self, l_max: usize) -> Self {
        Self { l_max, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), EmError> {
        if self.l_max < 1 {
            return Err(EmError::InvalidCluster("l_max must be at least 1".into()));
        }
        for (i, s) in self.spheres.iter().enumerate() {
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                return Err(EmError::InvalidCluster(format!("sphere {i}: radius must be positive, got {}", s.radius)));
            }
            if !s.center.is_finite() {
                return Err(EmError::InvalidCluster(format!("sphere {i}: centre is not finite")));
            }
        }
        for i in 0..self.spheres.len() {
            for j in (i + 1)..self.spheres.len() {
                let (a, b) = (&self.spheres[i], &self.spheres[j]);
                let gap = (a.center - b.center).norm() - a.radius - b.radius;
                if gap < 0.0 {
                    return Err(EmError::Overlap { first: i, second: j, gap });
                }
            }
        }
        Ok(())
    }

    /// Index of a sphere whose closed interior contains `r`.
    pub fn containing(&self, r: &Vec3<f64>) -> Option<usize> {
        self.spheres.iter().position(|s| (*r - s.center).norm() <= s.radius)
    }

    pub fn check_exterior(&self, r: &Vec3<f64>) -> Result<(), EmError> {
        match self.containing(r) {
            Some(sphere) => Err(EmError::InsideSphere { point: r.as_array(), sphere }),
            None => Ok(()),
        }
    }

    /// Unit vector of the common line through all centres, when there are at
    /// least two spheres and they are collinear.
    pub fn collinear_axis(&self) -> Option<Vec3<f64>> {
        let first = self.spheres.first()?.center;
        let far = self
            .spheres
            .iter()
            .map(|s| s.center - first)
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))?;
        let span = far.norm();
        if span == 0.0 {
            return None;
        }
        let u = far * (1.0 / span);
        let ok = self.spheres.iter().all(|s| {
            let d = s.center - first;
            (d - u * d.dot(&u)).norm() <= COLLINEAR_TOL * span
        });
        ok.then_some(u)
    }
}

/// Monochromatic plane wave `amplitude · polarization · exp(i k direction·r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub direction: Vec3<f64>,
    pub polarization: Vec3<f64>,
    /// V/m.
    pub amplitude: f64,
    /// rad/s.
    pub omega: f64,
}

impl PlaneWave {
    pub fn new(direction: Vec3<f64>, polarization: Vec3<f64>, amplitude: f64, omega: f64) -> Result<Self, EmError> {
        let pw = Self { direction, polarization, amplitude, omega };
        pw.validate()?;
        Ok(pw)
    }

    pub fn validate(&self) -> Result<(), EmError> {
        let tol = 1e-12;
        if (self.direction.norm() - 1.0).abs() > tol {
            return Err(EmError::InvalidPlaneWave("direction must be a unit vector".into()));
        }
        if (self.polarization.norm() - 1.0).abs() > tol {
            return Err(EmError::InvalidPlaneWave("polarization must be a unit vector".into()));
        }
        if self.direction.dot(&self.polarization).abs() > tol {
            return Err(EmError::InvalidPlaneWave("polarization must be orthogonal to direction".into()));
        }
        if !(self.omega > 0.0) {
            return Err(EmError::InvalidPlaneWave("frequency must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: f64, r: f64) -> Sphere {
        Sphere { center: Vec3::new(x, 0.0, 0.0), radius: r, material: Material::vacuum() }
    }

    #[test]
    fn overlap_is_reported_with_pair() {
        let c = SphereCluster { spheres: vec![sphere(0.0, 10e-9), sphere(19e-9, 10e-9)], host: Material::vacuum(), l_max: 3 };
        match c.validate() {
            Err(EmError::Overlap { first: 0, second: 1, gap }) => assert!((gap + 1e-9).abs() < 1e-18),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn touching_spheres_are_allowed() {
        let c = SphereCluster { spheres: vec![sphere(0.0, 1.0), sphere(2.0, 1.0)], host: Material::vacuum(), l_max: 3 };
        assert!(c.validate().is_ok());
    }

    #[test]
    fn collinear_detection() {
        let mut c = SphereCluster {
            spheres: vec![sphere(-21e-9, 10e-9), sphere(0.0, 10e-9), sphere(21e-9, 10e-9)],
            host: Material::vacuum(),
            l_max: 3,
        };
        let u = c.collinear_axis().unwrap();
        assert!((u.x.abs() - 1.0).abs() < 1e-15);
        c.spheres[1].center.y = 1e-9;
        assert!(c.collinear_axis().is_none());
        assert!(SphereCluster::empty(2).collinear_axis().is_none());
    }

    #[test]
    fn plane_wave_validation() {
        assert!(PlaneWave::new(Vec3::unit_z(), Vec3::unit_x(), 1.0, 1e15).is_ok());
        assert!(PlaneWave::new(Vec3::unit_z(), Vec3::unit_z(), 1.0, 1e15).is_err());
        assert!(PlaneWave::new(Vec3::new(0.0, 0.0, 2.0), Vec3::unit_x(), 1.0, 1e15).is_err());
    }

    #[test]
    fn exterior_check_names_sphere() {
        let c = SphereCluster { spheres: vec![sphere(0.0, 1.0), sphere(3.0, 1.0)], host: Material::vacuum(), l_max: 3 };
        assert!(matches!(c.check_exterior(&Vec3::new(3.2, 0.0, 0.0)), Err(EmError::InsideSphere { sphere: 1, .. })));
        assert!(c.check_exterior(&Vec3::new(1.5, 0.0, 0.0)).is_ok());
    }
}
