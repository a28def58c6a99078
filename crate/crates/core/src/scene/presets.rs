//! Named cluster geometries with emitters placed in the gaps.
//!
//! All lengths are in nanometres. Each preset checks its own symmetry
//! group coordinate-wise before it is returned.

use serde::{Deserialize, Serialize};

use super::{EmitterSpec, SceneError, SphereSpec};

/// Catalogue entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// Three spheres on the x axis, emitters in both gaps, dipoles along x.
    LinearTrimer,
    /// Spheres on the vertices of an equilateral triangle in the xy plane,
    /// emitters at edge midpoints with dipoles along the edges (cyclic).
    TriangleTrio,
    /// Four spheres on the vertices of a regular tetrahedron around a
    /// central sphere, emitters in the centre-vertex gaps with dipoles along
    /// the centre-vertex axes.
    TetraPlusCenter,
    /// One sphere with emitters on opposite sides along x, at the same
    /// standoff as in a trimer gap of width `d`.
    SingleSpherePair,
}

impl PresetKind {
    pub const ALL: [PresetKind; 4] =
        [PresetKind::LinearTrimer, PresetKind::TriangleTrio, PresetKind::TetraPlusCenter, PresetKind::SingleSpherePair];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::LinearTrimer => "linear_trimer",
            PresetKind::TriangleTrio => "triangle_trio",
            PresetKind::TetraPlusCenter => "tetra_plus_center",
            PresetKind::SingleSpherePair => "single_sphere_pair",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetKind::LinearTrimer => "three collinear spheres, two emitters in the gaps, dipoles along the axis",
            PresetKind::TriangleTrio => "three spheres on a triangle, three emitters in the gaps, dipoles along the edges",
            PresetKind::TetraPlusCenter => "four spheres on a tetrahedron plus a central sphere, four emitters in the centre gaps",
            PresetKind::SingleSpherePair => "one sphere with two emitters on opposite sides (no gaps)",
        }
    }

    pub fn emitter_count(self) -> usize {
        match self {
            PresetKind::LinearTrimer | PresetKind::SingleSpherePair => 2,
            PresetKind::TriangleTrio => 3,
            PresetKind::TetraPlusCenter => 4,
        }
    }
}

/// Preset geometry in nanometres.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetGeometry {
    pub spheres: Vec<SphereSpec>,
    pub emitters: Vec<EmitterSpec>,
}

type P3 = [f64; 3];

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(a: P3) -> P3 {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    scale(a, 1.0 / n)
}

fn apply(m: &[[f64; 3]; 3], v: P3) -> P3 {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn rot_z(angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Build the geometry of `kind` with sphere radius `r` and gap `d` (nm).
pub fn build(kind: PresetKind, r: f64, d: f64) -> Result<PresetGeometry, SceneError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(SceneError::Invalid(format!("preset {}: radius must be positive", kind.name())));
    }
    if !d.is_finite() {
        return Err(SceneError::Invalid(format!("preset {}: gap must be finite", kind.name())));
    }
    let pitch = 2.0 * r + d;
    let standoff = r + d / 2.0;
    let sphere = |c: P3| SphereSpec { center_nm: c, r_nm: r, material: None };
    let emitter = |p: P3, dir: P3| EmitterSpec { position_nm: p, direction: dir, r0_nm: None, omega_thz_angular: None };
    let geom = match kind {
        PresetKind::LinearTrimer => PresetGeometry {
            spheres: [-pitch, 0.0, pitch].map(|x| sphere([x, 0.0, 0.0])).to_vec(),
            emitters: [-standoff, standoff].map(|x| emitter([x, 0.0, 0.0], [1.0, 0.0, 0.0])).to_vec(),
        },
        PresetKind::SingleSpherePair => PresetGeometry {
            spheres: vec![sphere([0.0; 3])],
            emitters: [-standoff, standoff].map(|x| emitter([x, 0.0, 0.0], [1.0, 0.0, 0.0])).to_vec(),
        },
        PresetKind::TriangleTrio => {
            let rc = pitch / 3f64.sqrt();
            let centers: Vec<P3> = (0..3)
                .map(|i| {
                    let a = std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * i as f64 / 3.0;
                    [rc * a.cos(), rc * a.sin(), 0.0]
                })
                .collect();
            let emitters = (0..3)
                .map(|i| {
                    let (a, b) = (centers[i], centers[(i + 1) % 3]);
                    emitter(scale(add(a, b), 0.5), unit(sub(b, a)))
                })
                .collect();
            PresetGeometry { spheres: centers.into_iter().map(sphere).collect(), emitters }
        }
        PresetKind::TetraPlusCenter => {
            let dirs: [P3; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]].map(unit);
            let mut spheres = vec![sphere([0.0; 3])];
            spheres.extend(dirs.iter().map(|u| sphere(scale(*u, pitch))));
            let emitters = dirs.iter().map(|u| emitter(scale(*u, standoff), *u)).collect();
            PresetGeometry { spheres, emitters }
        }
    };
    check_symmetry(kind, &geom)?;
    Ok(geom)
}

/// Symmetry operations of each preset as 3×3 orthogonal matrices.
fn operations(kind: PresetKind) -> Vec<[[f64; 3]; 3]> {
    let mirror_x = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    match kind {
        PresetKind::LinearTrimer | PresetKind::SingleSpherePair => vec![mirror_x],
        PresetKind::TriangleTrio => vec![rot_z(std::f64::consts::TAU / 3.0), rot_z(-std::f64::consts::TAU / 3.0), mirror_x],
        PresetKind::TetraPlusCenter => {
            // C₃ about (1,1,1), C₂ about z, and the mirror x ↔ y generate T_d
            let c3 = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
            let c2 = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
            let sigma = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
            vec![c3, c2, sigma]
        }
    }
}

fn close(a: P3, b: P3, tol: f64) -> bool {
    (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
}

/// Every operation must map sphere centres onto sphere centres and emitters
/// onto emitters, with dipoles equal up to one common sign per operation.
pub fn check_symmetry(kind: PresetKind, geom: &PresetGeometry) -> Result<(), SceneError> {
    let extent = geom.spheres.iter().map(|s| s.center_nm.iter().fold(s.r_nm, |a, v| a.max(v.abs()))).fold(1.0, f64::max);
    let tol = 1e-12 * extent;
    for (k, op) in operations(kind).iter().enumerate() {
        for s in &geom.spheres {
            let img = apply(op, s.center_nm);
            if !geom.spheres.iter().any(|t| close(t.center_nm, img, tol)) {
                return Err(SceneError::Invalid(format!("preset {}: sphere centres break symmetry operation {k}", kind.name())));
            }
        }
        let mut sign = None;
        for e in &geom.emitters {
            let img = apply(op, e.position_nm);
            let dir = apply(op, e.direction);
            let Some(t) = geom.emitters.iter().find(|t| close(t.position_nm, img, tol)) else {
                return Err(SceneError::Invalid(format!("preset {}: emitter positions break symmetry operation {k}", kind.name())));
            };
            let s = if close(t.direction, dir, 1e-12) {
                1.0
            } else if close(t.direction, scale(dir, -1.0), 1e-12) {
                -1.0
            } else {
                return Err(SceneError::Invalid(format!("preset {}: dipoles break symmetry operation {k}", kind.name())));
            };
            if *sign.get_or_insert(s) != s {
                return Err(SceneError::Invalid(format!("preset {}: dipole signs break symmetry operation {k}", kind.name())));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimer_coordinates() {
        let g = build(PresetKind::LinearTrimer, 10.0, 1.0).unwrap();
        let xs: Vec<f64> = g.spheres.iter().map(|s| s.center_nm[0]).collect();
        assert_eq!(xs, vec![-21.0, 0.0, 21.0]);
        assert_eq!(g.emitters[1].position_nm, [10.5, 0.0, 0.0]);
    }

    #[test]
    fn gaps_are_as_requested() {
        for kind in PresetKind::ALL {
            let g = build(kind, 10.0, 2.0).unwrap();
            assert_eq!(g.emitters.len(), kind.emitter_count());
            let mut min_gap = f64::INFINITY;
            for (i, a) in g.spheres.iter().enumerate() {
                for b in &g.spheres[i + 1..] {
                    let dist = sub(a.center_nm, b.center_nm).iter().map(|v| v * v).sum::<f64>().sqrt();
                    min_gap = min_gap.min(dist - 20.0);
                }
                for e in &g.emitters {
                    let dist = sub(a.center_nm, e.position_nm).iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(dist >= 11.0 - 1e-12, "{kind:?}");
                }
            }
            if g.spheres.len() > 1 {
                assert!((min_gap - 2.0).abs() < 1e-12, "{kind:?} {min_gap}");
            }
        }
    }

    #[test]
    fn broken_symmetry_is_detected() {
        let mut g = build(PresetKind::TriangleTrio, 10.0, 1.0).unwrap();
        g.emitters[0].direction = scale(g.emitters[0].direction, -1.0);
        assert!(check_symmetry(PresetKind::TriangleTrio, &g).is_err());
        let mut t = build(PresetKind::TetraPlusCenter, 10.0, 1.0).unwrap();
        t.spheres[1].center_nm[0] += 1e-6;
        assert!(check_symmetry(PresetKind::TetraPlusCenter, &t).is_err());
        assert!(build(PresetKind::LinearTrimer, -1.0, 1.0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in PresetKind::ALL {
            assert_eq!(PresetKind::from_name(k.name()), Some(k));
        }
        assert_eq!(PresetKind::from_name("dimer"), None);
    }
}
