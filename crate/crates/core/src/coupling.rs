//! Decay-rate matrices of dipole emitters near a sphere cluster.
//!
//! `Γ_AB = (2ω² / (ħ ε₀ c²)) d_A · Im G(r_A, r_B, ω) · d_B`, with the free
//! part of `Im G` taken analytically and the scattered part from the cluster
//! solve. All emitters are evaluated at the common sweep frequency.

use crate::em::{free_green, ClusterGeometry, ClusterSystem, EmError, SolverOptions, SphereCluster, SPEED_OF_LIGHT};
use crate::numerics::{Real, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_8128e-12;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CouplingError {
    #[error(transparent)]
    Em(#[from] EmError),
    #[error("emitter {index}: {reason}")]
    InvalidEmitter { index: usize, reason: String },
    #[error("emitter {index} has zero decay rate; ratios are undefined")]
    ZeroRate { index: usize },
    #[error("frequency grid must be non-empty and strictly ascending")]
    BadGrid,
}

/// Two-level emitter with a real transition dipole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    /// m.
    pub position: Vec3<f64>,
    /// C·m.
    pub dipole: Vec3<f64>,
    /// Transition frequency, rad/s.
    pub omega_a: f64,
}

impl Emitter {
    pub fn new(position: Vec3<f64>, dipole: Vec3<f64>, omega_a: f64) -> Self {
        Self { position, dipole, omega_a }
    }

    /// Dipole of magnitude `e · r0` along `direction`.
    pub fn with_length(position: Vec3<f64>, direction: Vec3<f64>, r0: f64, omega_a: f64) -> Self {
        Self { position, dipole: direction.normalized() * (ELEMENTARY_CHARGE * r0), omega_a }
    }
}

/// Check the emitter invariants against a cluster.
pub fn validate_emitters(cluster: &SphereCluster, emitters: &[Emitter]) -> Result<(), CouplingError> {
    for (index, e) in emitters.iter().enumerate() {
        if !(e.dipole.norm() > 0.0) || !e.dipole.is_finite() {
            return Err(CouplingError::InvalidEmitter { index, reason: "dipole must be finite and nonzero".into() });
        }
        if !e.position.is_finite() {
            return Err(CouplingError::InvalidEmitter { index, reason: "position is not finite".into() });
        }
        if let Some(sphere) = cluster.containing(&e.position) {
            return Err(CouplingError::InvalidEmitter { index, reason: format!("position lies inside sphere {sphere}") });
        }
    }
    Ok(())
}

/// Free-space rate `Γ₀ = ω³|d|² / (3π ε₀ ħ c³)`.
pub fn free_space_rate<T: Real>(omega: T, dipole_norm: T) -> T {
    let c = T::lit(SPEED_OF_LIGHT);
    omega.powi(3) * dipole_norm * dipole_norm / (T::lit(3.0) * T::PI() * T::lit(EPSILON_0) * T::lit(HBAR) * c.powi(3))
}

/// `Γ_AB` for every ordered emitter pair at one frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayMatrix<T> {
    /// Row-major `N × N`, 1/s.
    pub gamma: Vec<T>,
    pub omega: T,
    pub emitters: Vec<Emitter>,
}

impl<T: Real> DecayMatrix<T> {
    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.gamma[a * self.len() + b]
    }

    /// `max |Γ_AB − Γ_BA| / max |Γ|`.
    pub fn asymmetry(&self) -> T {
        let n = self.len();
        let scale = self.gamma.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.get(a, b) - self.get(b, a)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }
}

fn prefactor<T: Real>(omega: T) -> T {
    let c = T::lit(SPEED_OF_LIGHT);
    T::lit(2.0) * omega * omega / (T::lit(HBAR) * T::lit(EPSILON_0) * c * c)
}

/// Decay matrix using an already assembled cluster system (one solve per emitter).
pub fn decay_matrix_with<T: Real>(sys: &ClusterSystem<T>, emitters: &[Emitter]) -> Result<DecayMatrix<T>, CouplingError> {
    let omega = sys.omega();
    let k = sys.wavenumber();
    let n = emitters.len();
    let pos: Vec<Vec3<T>> = emitters.iter().map(|e| e.position.cast()).collect();
    let dip: Vec<Vec3<T>> = emitters.iter().map(|e| e.dipole.cast()).collect();
    let coincident = k.re / (T::lit(6.0) * T::PI());
    let mut im_g = vec![T::zero(); n * n];
    for b in 0..n {
        let solution = if sys.geometry().sphere_count() > 0 {
            let src = sys.dipole_source(&pos[b], &dip[b].to_complex())?;
            Some(sys.solve(&src)?)
        } else {
            None
        };
        for a in 0..n {
            let mut v = if a == b || (pos[a] - pos[b]).norm() == T::zero() {
                coincident * dip[a].dot(&dip[b])
            } else {
                free_green(k, &pos[a], &pos[b])?.bilinear(&dip[a], &dip[b]).im
            };
            if let Some(sol) = &solution {
                v = v + sys.scattered_field(&sol.beta, &pos[a])?.dot_real(&dip[a]).im;
            }
            im_g[a * n + b] = v;
        }
    }
    let pre = prefactor(omega);
    Ok(DecayMatrix { gamma: im_g.into_iter().map(|v| v * pre).collect(), omega, emitters: emitters.to_vec() })
}

/// Decay matrix of `emitters` near `cluster` at angular frequency `omega`.
pub fn decay_matrix<T: Real>(cluster: &SphereCluster, emitters: &[Emitter], omega: T) -> Result<DecayMatrix<T>, CouplingError> {
    validate_emitters(cluster, emitters)?;
    let sys = ClusterSystem::for_cluster(cluster, omega, SolverOptions::default())?;
    decay_matrix_with(&sys, emitters)
}

/// Dimensionless rates derived from a [`DecayMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRates<T> {
    /// `Γ_AA / Γ₀(A)` per emitter.
    pub gamma_over_gamma0: Vec<T>,
    /// `(a, b, Γ_ab / Γ_aa)` for every `a < b`.
    pub pair_ratio: Vec<(usize, usize, T)>,
}

pub fn normalized_rates<T: Real>(dm: &DecayMatrix<T>) -> Result<NormalizedRates<T>, CouplingError> {
    let n = dm.len();
    let mut gamma_over_gamma0 = Vec::with_capacity(n);
    for (a, e) in dm.emitters.iter().enumerate() {
        let g = dm.get(a, a);
        if !(g > T::zero()) {
            return Err(CouplingError::ZeroRate { index: a });
        }
        gamma_over_gamma0.push(g / free_space_rate(dm.omega, T::lit(e.dipole.norm())));
    }
    let mut pair_ratio = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            pair_ratio.push((a, b, dm.get(a, b) / dm.get(a, a)));
        }
    }
    Ok(NormalizedRates { gamma_over_gamma0, pair_ratio })
}

/// One frequency of a sweep; failures are kept per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega: f64,
    pub result: Result<SweepPoint, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rates: NormalizedRates<f64>,
    /// Absolute `Γ_AA`, 1/s.
    pub gamma: Vec<f64>,
    /// `Γ_AB`, row-major, 1/s.
    pub matrix: Vec<f64>,
}

/// Decay rates over an ascending frequency grid, one independent task per
/// frequency. Output order follows the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub emitter_count: usize,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    /// `(ω, Γ_00, Γ_01/Γ_00)` for rows that succeeded; the ratio is 0 with one emitter.
    pub fn curve(&self) -> Vec<(f64, f64, f64)> {
        self.curve_for(0, 1)
    }

    /// `(ω, Γ_aa, Γ_ab/Γ_aa)` for rows that succeeded.
    pub fn curve_for(&self, a: usize, b: usize) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let p = r.result.as_ref().ok()?;
                let n = self.emitter_count;
                let ratio = if b < n && a != b { p.matrix[a * n + b] / p.matrix[a * n + a] } else { 0.0 };
                Some((r.omega, p.gamma[a], ratio))
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }
}

/// Uniform grid of `n` points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Sweep the decay matrix over `grid`.
pub fn sweep(cluster: &SphereCluster, emitters: &[Emitter], grid: &[f64], options: &SolverOptions) -> Result<Sweep, CouplingError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CouplingError::BadGrid);
    }
    validate_emitters(cluster, emitters)?;
    let geom = Arc::new(ClusterGeometry::<f64>::new(cluster, options.clone())?);
    let rows = grid
        .par_iter()
        .map(|&omega| {
            let point = (|| -> Result<SweepPoint, CouplingError> {
                let sys = ClusterSystem::new(geom.clone(), cluster, omega)?;
                let dm = decay_matrix_with(&sys, emitters)?;
                let rates = normalized_rates(&dm)?;
                let n = dm.len();
                Ok(SweepPoint { rates, gamma: (0..n).map(|a| dm.get(a, a)).collect(), matrix: dm.gamma })
            })();
            SweepRow { omega, result: point.map_err(|e| e.to_string()) }
        })
        .collect();
    Ok(Sweep { emitter_count: emitters.len(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{Material, Sphere};

    fn nm(x: f64) -> f64 {
        x * 1e-9
    }

    #[test]
    fn free_space_reference_rate() {
        let g0 = free_space_rate(4.8e15, ELEMENTARY_CHARGE * 1e-9);
        // ω³ e² r0² / (3π ε₀ ħ c³) evaluated by hand with CODATA 2018 values
        assert!((g0 / 1.2e10 - 1.0).abs() < 0.05, "{g0:e}");
        let e = Emitter::with_length(Vec3::zero(), Vec3::unit_z(), 1e-9, 4.8e15);
        let dm = decay_matrix::<f64>(&SphereCluster::empty(3), &[e], 4.8e15).unwrap();
        assert!((dm.get(0, 0) / g0 - 1.0).abs() < 1e-14);
        let r = normalized_rates(&dm).unwrap();
        assert!((r.gamma_over_gamma0[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_space_pair_matches_closed_form() {
        let w = 4.5e15;
        let k = w / SPEED_OF_LIGHT;
        let sep = nm(40.0);
        let a = Emitter::with_length(Vec3::zero(), Vec3::unit_z(), 1e-9, w);
        let b = Emitter::with_length(Vec3::new(sep, 0.0, 0.0), Vec3::unit_z(), 1e-9, w);
        let dm = decay_matrix::<f64>(&SphereCluster::empty(3), &[a, b], w).unwrap();
        // parallel dipoles perpendicular to the separation:
        // Γ_AB/Γ0 = (3/2)[sin x / x + cos x / x² − sin x / x³], x = kR
        let x = k * sep;
        let want = 1.5 * (x.sin() / x + x.cos() / (x * x) - x.sin() / x.powi(3));
        let got = dm.get(0, 1) / dm.get(0, 0);
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        assert_eq!(dm.asymmetry(), 0.0);
    }

    #[test]
    fn coincident_emitters_have_unit_ratio() {
        let w = 4.5e15;
        let a = Emitter::with_length(Vec3::new(1e-12, 0.0, 0.0), Vec3::unit_x(), 1e-9, w);
        let b = Emitter::with_length(Vec3::zero(), Vec3::unit_x(), 1e-9, w);
        let dm = decay_matrix::<f64>(&SphereCluster::empty(3), &[a, b], w).unwrap();
        let r = normalized_rates(&dm).unwrap();
        assert!((r.pair_ratio[0].2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn emitter_inside_sphere_is_named() {
        let c = SphereCluster {
            spheres: vec![Sphere { center: Vec3::zero(), radius: nm(10.0), material: Material::vacuum() }],
            host: Material::vacuum(),
            l_max: 4,
        };
        let e = Emitter::with_length(Vec3::new(nm(20.0), 0.0, 0.0), Vec3::unit_x(), 1e-9, 4e15);
        let inside = Emitter::with_length(Vec3::new(nm(2.0), 0.0, 0.0), Vec3::unit_x(), 1e-9, 4e15);
        match decay_matrix::<f64>(&c, &[e, inside], 4e15) {
            Err(CouplingError::InvalidEmitter { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_rejects_unsorted_grid_and_keeps_order() {
        let e = Emitter::with_length(Vec3::zero(), Vec3::unit_z(), 1e-9, 4e15);
        let c = SphereCluster::empty(2);
        assert_eq!(sweep(&c, &[e.clone()], &[2.0, 1.0], &SolverOptions::default()), Err(CouplingError::BadGrid));
        let grid = linear_grid(3.5e15, 6e15, 9);
        let s = sweep(&c, &[e], &grid, &SolverOptions::default()).unwrap();
        for (row, w) in s.rows.iter().zip(&grid) {
            assert_eq!(row.omega, *w);
            let p = row.result.as_ref().unwrap();
            assert!((p.rates.gamma_over_gamma0[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range_rows_fail_individually() {
        let c = SphereCluster {
            spheres: vec![Sphere { center: Vec3::zero(), radius: nm(10.0), material: Material::silver().unwrap() }],
            host: Material::vacuum(),
            l_max: 6,
        };
        let e = Emitter::with_length(Vec3::new(nm(15.0), 0.0, 0.0), Vec3::unit_x(), 1e-9, 4e15);
        let hi = c.spheres[0].material.range().1;
        let s = sweep(&c, &[e], &[4e15, hi * 1.5], &SolverOptions::default()).unwrap();
        assert!(s.rows[0].result.is_ok());
        assert!(s.rows[1].result.is_err());
        assert_eq!(s.failures(), 1);
    }
}
