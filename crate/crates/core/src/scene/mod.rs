//! Scene files, preset geometries and the batch pipeline that writes
//! spectra, entanglement traces and field maps.
//!
//! Scene files are JSON with the unit in every dimensional key: lengths in
//! nanometres (`_nm`), angular frequencies in 10¹² rad/s
//! (`_thz_angular`), times in femtoseconds (`_fs`). A file may name a
//! preset instead of listing spheres and emitters:
//!
//! ```json
//! {"preset": "linear_trimer", "R_nm": 10, "d_nm": 1}
//! ```
//!
//! Loading expands the preset, so saving a loaded scene writes the full
//! geometry and reloading it gives back the same value.

mod pipeline;
mod presets;

pub use pipeline::{
    classify_point, compute_sweep, detect_peaks, dynamics_from_sweep, fieldmap_summary, reproduce_figures, resolve_resonance, run_dynamics,
    run_fieldmap, run_sweep, write_sweep_csv, ConvergenceCheck, DynamicsOutput, FieldMapOutput, FieldMapSummary,
    FigureOptions, Hotspot, Manifest, Panel, PanelStatus, PeakInfo, PeakSelector, RunOptions, Series, SweepOutput,
    PEAK_PROMINENCE,
};
pub use presets::{build as build_preset, check_symmetry, PresetGeometry, PresetKind};

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{validate_emitters, CouplingError, Emitter};
use crate::dynamics::DynamicsError;
use crate::em::{EmError, Material, MaterialError, PlaneWave, Sphere, SphereCluster};
use crate::entanglement::EntanglementError;
use crate::numerics::Vec3;

/// Default transition-dipole length, nm (`|d| = e r₀`).
pub const DEFAULT_R0_NM: f64 = 1.0;

const NM: f64 = 1e-9;
const THZ: f64 = 1e12;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("scene parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Em(#[from] EmError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
    #[error("refused: {0}")]
    Refused(String),
    #[error("all {0} sweep rows failed")]
    AllRowsFailed(usize),
}

impl SceneError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        SceneError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

/// Material reference: a bundled table by name, or a constant permittivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSpec {
    Named(String),
    Constant { eps_re: f64, eps_im: f64 },
}

impl MaterialSpec {
    pub fn resolve(&self) -> Result<Material, SceneError> {
        match self {
            MaterialSpec::Named(n) if n == "silver" => Ok(Material::silver()?),
            MaterialSpec::Named(n) => Err(SceneError::Invalid(format!("unknown material '{n}' (known: silver)"))),
            MaterialSpec::Constant { eps_re, eps_im } => Ok(Material::constant(Complex::new(*eps_re, *eps_im))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    pub center_nm: [f64; 3],
    #[serde(rename = "R_nm")]
    pub r_nm: f64,
    /// Falls back to the scene material.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub position_nm: [f64; 3],
    /// Dipole direction, normalized on use.
    pub direction: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0_nm: Option<f64>,
    /// Transition frequency; dynamics runs put it on the selected resonance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_thz_angular: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub omega_min_thz_angular: f64,
    pub omega_max_thz_angular: f64,
    pub points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { omega_min_thz_angular: 3500.0, omega_max_thz_angular: 6000.0, points: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSpec {
    /// Field-preparation interval.
    pub delta_t_fs: f64,
    /// `ω_A − ω_m`.
    pub detuning_thz_angular: f64,
    /// Trace length in units of `1/δω_m`.
    pub t_max_over_delta: f64,
    pub samples: usize,
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        Self { delta_t_fs: 0.0, detuning_thz_angular: 0.0, t_max_over_delta: 20.0, samples: 2001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminationSpec {
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
}

/// A validated scene. Numeric fields are kept in file units so that a
/// save/load round trip is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(rename = "R_nm", default, skip_serializing_if = "Option::is_none")]
    pub r_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_nm: Option<f64>,
    #[serde(default)]
    pub spheres: Vec<SphereSpec>,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
    #[serde(default = "default_material")]
    pub material: MaterialSpec,
    #[serde(default = "default_host")]
    pub host_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub illumination: Option<IlluminationSpec>,
}

fn default_material() -> MaterialSpec {
    MaterialSpec::Named("silver".into())
}

fn default_host() -> f64 {
    1.0
}

impl Scene {
    /// Expanded preset scene with default sweep and dynamics settings.
    pub fn preset(kind: PresetKind, r_nm: f64, d_nm: f64) -> Result<Self, SceneError> {
        let g = presets::build(kind, r_nm, d_nm)?;
        let scene = Scene {
            name: Some(format!("{} R={r_nm} nm d={d_nm} nm", kind.name())),
            preset: Some(kind.name().into()),
            r_nm: Some(r_nm),
            d_nm: Some(d_nm),
            spheres: g.spheres,
            emitters: g.emitters,
            material: default_material(),
            host_eps: 1.0,
            l_max: None,
            sweep: SweepSpec::default(),
            dynamics: DynamicsSpec::default(),
            illumination: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Parse, expand a preset reference and validate.
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let mut scene: Scene = serde_json::from_str(text).map_err(|e| SceneError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if scene.spheres.is_empty() && scene.emitters.is_empty() {
            if let Some(name) = scene.preset.clone() {
                let kind = PresetKind::from_name(&name).ok_or_else(|| {
                    let known: Vec<&str> = PresetKind::ALL.iter().map(|k| k.name()).collect();
                    SceneError::Invalid(format!("unknown preset '{name}' (known: {})", known.join(", ")))
                })?;
                let r = scene.r_nm.ok_or_else(|| SceneError::Invalid(format!("preset {name} needs R_nm")))?;
                let d = scene.d_nm.ok_or_else(|| SceneError::Invalid(format!("preset {name} needs d_nm")))?;
                let g = presets::build(kind, r, d)?;
                scene.spheres = g.spheres;
                scene.emitters = g.emitters;
            }
        }
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("scene serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn preset_kind(&self) -> Option<PresetKind> {
        self.preset.as_deref().and_then(PresetKind::from_name)
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("scene {}", &self.hash()[..12]))
    }

    /// Check every invariant; errors name the offending entity.
    pub fn validate(&self) -> Result<(), SceneError> {
        for (i, s) in self.spheres.iter().enumerate() {
            if !s.center_nm.iter().all(|v| v.is_finite()) || !(s.r_nm > 0.0) || !s.r_nm.is_finite() {
                return Err(SceneError::Invalid(format!("sphere {i}: centre must be finite and radius positive")));
            }
        }
        for (i, e) in self.emitters.iter().enumerate() {
            let n = e.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(SceneError::Invalid(format!("emitter {i}: direction must be finite and nonzero")));
            }
            if e.r0_nm.is_some_and(|r| !(r > 0.0) || !r.is_finite()) {
                return Err(SceneError::Invalid(format!("emitter {i}: r0_nm must be positive")));
            }
        }
        if !(self.host_eps > 0.0) || !self.host_eps.is_finite() {
            return Err(SceneError::Invalid("host_eps must be positive".into()));
        }
        if self.l_max == Some(0) {
            return Err(SceneError::Invalid("l_max must be at least 1".into()));
        }
        let sw = &self.sweep;
        if !(sw.omega_min_thz_angular > 0.0) || !(sw.omega_max_thz_angular >= sw.omega_min_thz_angular) || sw.points == 0 {
            return Err(SceneError::Invalid("sweep needs 0 < omega_min ≤ omega_max and at least one point".into()));
        }
        if sw.points > 1 && sw.omega_max_thz_angular == sw.omega_min_thz_angular {
            return Err(SceneError::Invalid("sweep with several points needs omega_max > omega_min".into()));
        }
        let dy = &self.dynamics;
        if !(dy.delta_t_fs >= 0.0) || !dy.detuning_thz_angular.is_finite() || !(dy.t_max_over_delta > 0.0) || dy.samples < 2 {
            return Err(SceneError::Invalid("dynamics needs delta_t_fs ≥ 0, t_max_over_delta > 0 and samples ≥ 2".into()));
        }
        if let Some(ill) = &self.illumination {
            self.plane_wave(ill, 1.0)?;
        }
        let cluster = self.cluster(1)?;
        validate_emitters(&cluster, &self.emitters())?;
        let (lo, hi) = self.material_range()?;
        let (a, b) = self.grid_bounds();
        if a < lo || b > hi {
            return Err(SceneError::Invalid(format!(
                "sweep [{:.1}, {:.1}] x 1e12 rad/s leaves the material data range [{:.1}, {:.1}]",
                a / THZ,
                b / THZ,
                lo / THZ,
                hi / THZ
            )));
        }
        Ok(())
    }

    /// Intersection of the frequency ranges of all materials in use, rad/s.
    pub fn material_range(&self) -> Result<(f64, f64), SceneError> {
        let mut range = (0.0f64, f64::INFINITY);
        for m in self.materials()? {
            let (lo, hi) = m.range();
            range = (range.0.max(lo), range.1.min(hi));
        }
        Ok(range)
    }

    fn materials(&self) -> Result<Vec<Material>, SceneError> {
        let default = self.material.resolve()?;
        self.spheres
            .iter()
            .map(|s| match &s.material {
                Some(m) => m.resolve(),
                None => Ok(default.clone()),
            })
            .collect()
    }

    /// Material provenance strings, deduplicated.
    pub fn provenance(&self) -> Result<Vec<String>, SceneError> {
        let mut out: Vec<String> = self.materials()?.iter().map(|m| m.provenance()).collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Cluster in SI units.
    pub fn cluster(&self, l_max: usize) -> Result<SphereCluster, SceneError> {
        let mats = self.materials()?;
        let spheres = self
            .spheres
            .iter()
            .zip(mats)
            .map(|(s, material)| Sphere { center: Vec3::from_array(s.center_nm.map(|v| v * NM)), radius: s.r_nm * NM, material })
            .collect();
        Ok(SphereCluster::new(spheres, Material::constant(Complex::new(self.host_eps, 0.0)), l_max)?)
    }

    /// Emitters in SI units; unset transition frequencies are 0.
    pub fn emitters(&self) -> Vec<Emitter> {
        self.emitters
            .iter()
            .map(|e| {
                Emitter::with_length(
                    Vec3::from_array(e.position_nm.map(|v| v * NM)),
                    Vec3::from_array(e.direction),
                    e.r0_nm.unwrap_or(DEFAULT_R0_NM) * NM,
                    e.omega_thz_angular.map_or(0.0, |w| w * THZ),
                )
            })
            .collect()
    }

    pub fn grid_bounds(&self) -> (f64, f64) {
        (self.sweep.omega_min_thz_angular * THZ, self.sweep.omega_max_thz_angular * THZ)
    }

    /// Sweep grid, rad/s.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.grid_bounds();
        crate::coupling::linear_grid(lo, hi, self.sweep.points)
    }

    pub fn plane_wave(&self, ill: &IlluminationSpec, omega: f64) -> Result<PlaneWave, SceneError> {
        let dir = Vec3::from_array(ill.direction).normalized();
        let pol = Vec3::from_array(ill.polarization).normalized();
        Ok(PlaneWave::new(dir, pol, 1.0, omega)?)
    }

    /// Normal incidence onto the xz plane (along y), polarized along the
    /// cluster axis when the cluster is collinear and otherwise along x.
    pub fn default_illumination(&self) -> IlluminationSpec {
        let axis = self
            .cluster(1)
            .ok()
            .and_then(|c| c.collinear_axis())
            .filter(|a| a.y.abs() < 1e-12)
            .map(|a| a.as_array())
            .unwrap_or([1.0, 0.0, 0.0]);
        IlluminationSpec { direction: [0.0, 1.0, 0.0], polarization: axis }
    }

    /// Multipole order for a prescribed relative accuracy of the decay rate
    /// of the emitter closest to a sphere surface.
    pub fn recommended_l_max(&self) -> usize {
        recommended_l_max(self)
    }
}

/// Multipole truncation rule.
///
/// The scattered field of sphere order `n` seen at standoff `δ` from a
/// sphere of radius `R` decays like `(1 + δ/R)^{−2n}`; the order where this
/// reaches `2·10⁻⁴` is rounded up to a multiple of five and clamped to
/// `[20, 80]`. Non-collinear clusters are capped at 40 because their
/// solves use full translations.
pub fn recommended_l_max(scene: &Scene) -> usize {
    const TARGET: f64 = 2e-4;
    let mut worst: Option<f64> = None;
    for e in &scene.emitters {
        for s in &scene.spheres {
            let dist = (0..3).map(|k| (e.position_nm[k] - s.center_nm[k]).powi(2)).sum::<f64>().sqrt();
            let ratio = ((dist - s.r_nm) / s.r_nm).max(1e-6);
            let l = (1.0 / TARGET).ln() / (2.0 * (1.0 + ratio).ln());
            worst = Some(worst.map_or(l, |w: f64| w.max(l)));
        }
    }
    let raw = worst.unwrap_or(0.0);
    let mut l = ((raw / 5.0).ceil() as usize * 5).clamp(20, 80);
    let collinear = scene.cluster(1).ok().is_some_and(|c| c.spheres.len() < 3 || c.collinear_axis().is_some());
    if !collinear {
        l = l.min(40);
    }
    l
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    Scene::from_json(&text)
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneError> {
    std::fs::write(path, scene.to_json() + "\n").map_err(|e| SceneError::io(path, e))
}
