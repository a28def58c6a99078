//! Batch runs over scenes: decay-rate sweeps, resonance extraction with
//! entanglement traces, plane-wave field maps and the full figure set.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{PresetKind, Scene, SceneError};
use crate::coupling::{decay_matrix_with, free_space_rate, linear_grid, sweep, Emitter, Sweep};
use crate::dynamics::{
    classify_coupling, extract_resonance, find_peaks, integrate_kernel, CollectiveMode, Coupling, DynamicsConfig,
    FitOptions, KernelOptions, ModeKind, ResonanceParams, STRONG_COUPLING_RATIO,
};
use crate::em::{field_map, ClusterGeometry, ClusterSystem, FieldMap, PlaneSpec, SolverOptions, SphereCluster, MASKED};
use crate::entanglement::{entanglement_trace, mode_state, trace_from_amplitude, EntanglementTrace};
use crate::numerics::Vec3;

/// Minimum peak prominence, relative to the largest rate on the grid.
pub const PEAK_PROMINENCE: f64 = 0.05;

/// Points of the local sweep used to fit one resonance.
const LOCAL_POINTS: usize = 41;

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Overrides the scene value and the truncation rule.
    pub l_max: Option<usize>,
    pub solver: SolverOptions,
    /// Repeat the strongest grid point at `l_max + 5`.
    pub convergence_check: bool,
    /// `(lo, hi, n)` in rad/s, overriding the scene grid.
    pub grid: Option<(f64, f64, usize)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { l_max: None, solver: SolverOptions::default(), convergence_check: true, grid: None }
    }
}

impl RunOptions {
    pub fn l_max_for(&self, scene: &Scene) -> usize {
        self.l_max.or(scene.l_max).unwrap_or_else(|| scene.recommended_l_max())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub omega_rad_s: f64,
    pub l_max: usize,
    pub l_max_plus: usize,
    pub gamma_over_gamma0: f64,
    pub gamma_over_gamma0_plus: f64,
    pub relative_change: f64,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub sweep: Sweep,
    pub l_max: usize,
    pub convergence: Option<ConvergenceCheck>,
    pub wall_time_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    /// Row of the sweep.
    pub index: usize,
    pub omega_rad_s: f64,
    pub gamma_over_gamma0: f64,
    pub gamma_ab_over_gamma: f64,
}

impl SweepOutput {
    /// `(ω, Γ/Γ₀, Γ_AB/Γ, Γ)` of emitter 0 and pair (0, 1) on rows that succeeded.
    pub fn curve(&self) -> Vec<(usize, f64, f64, f64, f64)> {
        let n = self.sweep.emitter_count;
        self.sweep
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let p = r.result.as_ref().ok()?;
                let ratio = if n > 1 { p.matrix[1] / p.matrix[0] } else { 0.0 };
                Some((i, r.omega, p.rates.gamma_over_gamma0[0], ratio, p.gamma[0]))
            })
            .collect()
    }

    pub fn peaks(&self) -> Vec<PeakInfo> {
        detect_peaks(self)
    }
}

/// Local maxima of `Γ/Γ₀` (emitter 0) with prominence at least
/// [`PEAK_PROMINENCE`] of the largest value, ascending in frequency.
pub fn detect_peaks(out: &SweepOutput) -> Vec<PeakInfo> {
    let curve = out.curve();
    let g: Vec<f64> = curve.iter().map(|c| c.2).collect();
    find_peaks(&g, PEAK_PROMINENCE)
        .into_iter()
        .map(|k| PeakInfo { index: curve[k].0, omega_rad_s: curve[k].1, gamma_over_gamma0: curve[k].2, gamma_ab_over_gamma: curve[k].3 })
        .collect()
}

fn run_grid(scene: &Scene, cluster: &SphereCluster, emitters: &[Emitter], grid: &[f64], opts: &RunOptions) -> Result<Sweep, SceneError> {
    let _ = scene;
    let s = sweep(cluster, emitters, grid, &opts.solver)?;
    if s.failures() == s.rows.len() {
        return Err(SceneError::AllRowsFailed(s.rows.len()));
    }
    Ok(s)
}

/// Decay-rate sweep over the scene grid (or the override in `opts`).
pub fn compute_sweep(scene: &Scene, opts: &RunOptions) -> Result<SweepOutput, SceneError> {
    let start = Instant::now();
    let l_max = opts.l_max_for(scene);
    let cluster = scene.cluster(l_max)?;
    let emitters = scene.emitters();
    let grid = match opts.grid {
        Some((lo, hi, n)) => linear_grid(lo, hi, n),
        None => scene.grid(),
    };
    let (lo, hi) = scene.material_range()?;
    if grid.first().is_some_and(|w| *w < lo) || grid.last().is_some_and(|w| *w > hi) {
        return Err(SceneError::Invalid("sweep grid leaves the material data range".into()));
    }
    let s = run_grid(scene, &cluster, &emitters, &grid, opts)?;
    let mut out = SweepOutput { sweep: s, l_max, convergence: None, wall_time_s: 0.0 };
    if opts.convergence_check && !emitters.is_empty() && !cluster.spheres.is_empty() {
        let best = out.curve().into_iter().max_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal));
        if let Some((_, omega, g, _, _)) = best {
            let plus = cluster.with_l_max(l_max + 5);
            let geom = Arc::new(ClusterGeometry::<f64>::new(&plus, opts.solver.clone())?);
            let sys = ClusterSystem::new(geom, &plus, omega)?;
            let dm = decay_matrix_with(&sys, &emitters[..1])?;
            let g5 = dm.get(0, 0) / free_space_rate(omega, emitters[0].dipole.norm());
            out.convergence = Some(ConvergenceCheck {
                omega_rad_s: omega,
                l_max,
                l_max_plus: l_max + 5,
                gamma_over_gamma0: g,
                gamma_over_gamma0_plus: g5,
                relative_change: (g5 - g).abs() / g.abs(),
            });
        }
    }
    out.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Sweep CSV: `omega_rad_s,gamma_over_gamma0,gamma_ab_over_gamma`, then
/// `gamma_over_gamma0_<j>` for the other emitters, `gamma_ab_over_gamma_<a>_<b>`
/// for the other pairs (relative to `Γ_aa`), `gamma_s` (absolute `Γ_00`)
/// and `error`. Failed rows leave the numeric cells empty.
pub fn write_sweep_csv(out: &SweepOutput, path: &Path) -> Result<(), SceneError> {
    let n = out.sweep.emitter_count;
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|p| *p != (0, 1)).collect();
    let mut header = vec!["omega_rad_s".to_string(), "gamma_over_gamma0".into(), "gamma_ab_over_gamma".into()];
    header.extend((1..n).map(|j| format!("gamma_over_gamma0_{j}")));
    header.extend(pairs.iter().map(|(a, b)| format!("gamma_ab_over_gamma_{a}_{b}")));
    header.push("gamma_s".into());
    header.push("error".into());
    let mut w = csv::Writer::from_path(path).map_err(|e| SceneError::io(path, e))?;
    w.write_record(&header).map_err(|e| SceneError::io(path, e))?;
    for row in &out.sweep.rows {
        let mut rec = vec![format!("{:e}", row.omega)];
        match &row.result {
            Ok(p) => {
                let g0 = &p.rates.gamma_over_gamma0;
                rec.push(format!("{:e}", g0.first().copied().unwrap_or(f64::NAN)));
                rec.push(if n > 1 { format!("{:e}", p.matrix[1] / p.matrix[0]) } else { String::new() });
                rec.extend((1..n).map(|j| format!("{:e}", g0[j])));
                rec.extend(pairs.iter().map(|&(a, b)| format!("{:e}", p.matrix[a * n + b] / p.matrix[a * n + a])));
                rec.push(p.gamma.first().map_or(String::new(), |g| format!("{g:e}")));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), header.len() - 2));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec).map_err(|e| SceneError::io(path, e))?;
    }
    w.flush().map_err(|e| SceneError::io(path, e))
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), SceneError> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    std::fs::write(path, text + "\n").map_err(|e| SceneError::io(path, e))
}

fn provenance(scene: &Scene) -> serde_json::Value {
    json!({
        "scene_hash": scene.hash(),
        "scene": scene,
        "materials": scene.provenance().unwrap_or_default(),
        "crate_version": env!("CARGO_PKG_VERSION"),
    })
}

/// Sweep the scene, write the CSV and a JSON sidecar next to it.
pub fn run_sweep(scene: &Scene, opts: &RunOptions, path: &Path) -> Result<SweepOutput, SceneError> {
    let out = compute_sweep(scene, opts)?;
    write_sweep_csv(&out, path)?;
    let grid: Vec<f64> = out.sweep.rows.iter().map(|r| r.omega).collect();
    let meta = json!({
        "kind": "sweep",
        "provenance": provenance(scene),
        "l_max": out.l_max,
        "grid": {"omega_min_rad_s": grid.first(), "omega_max_rad_s": grid.last(), "points": grid.len()},
        "convergence": out.convergence,
        "failed_rows": out.sweep.failures(),
        "peaks": out.peaks(),
        "wall_time_s": out.wall_time_s,
    });
    write_json(&sidecar_path(path), &meta)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakSelector {
    /// Zero-based, ascending in frequency.
    Index(usize),
    /// Detected peak closest to this frequency, rad/s.
    Nearest(f64),
    /// Largest `Γ/Γ₀`.
    Strongest,
}

impl PeakSelector {
    pub fn select(&self, peaks: &[PeakInfo]) -> Option<PeakInfo> {
        match *self {
            PeakSelector::Index(i) => peaks.get(i).copied(),
            PeakSelector::Nearest(w) => peaks
                .iter()
                .copied()
                .min_by(|a, b| (a.omega_rad_s - w).abs().partial_cmp(&(b.omega_rad_s - w).abs()).unwrap_or(std::cmp::Ordering::Equal)),
            PeakSelector::Strongest => peaks
                .iter()
                .copied()
                .max_by(|a, b| a.gamma_over_gamma0.partial_cmp(&b.gamma_over_gamma0).unwrap_or(std::cmp::Ordering::Equal)),
        }
    }
}

/// Fit a Lorentzian to one detected peak on a refined local grid.
///
/// The local window spans three estimated half widths on each side,
/// clipped at the midpoints to the neighbouring peaks.
pub fn resolve_resonance(scene: &Scene, out: &SweepOutput, peak: &PeakInfo, opts: &RunOptions) -> Result<ResonanceParams<f64>, SceneError> {
    let curve = out.curve();
    let peaks = out.peaks();
    let k = curve.iter().position(|c| c.0 == peak.index).ok_or(crate::dynamics::DynamicsError::NoPeak)?;
    let (w_lo, w_hi) = (curve[0].1, curve[curve.len() - 1].1);
    let lo_bound = peaks
        .iter()
        .filter(|p| p.omega_rad_s < peak.omega_rad_s)
        .map(|p| 0.5 * (p.omega_rad_s + peak.omega_rad_s))
        .fold(w_lo, f64::max);
    let hi_bound = peaks
        .iter()
        .filter(|p| p.omega_rad_s > peak.omega_rad_s)
        .map(|p| 0.5 * (p.omega_rad_s + peak.omega_rad_s))
        .fold(w_hi, f64::min);
    let inside: Vec<&(usize, f64, f64, f64, f64)> = curve.iter().filter(|c| c.1 >= lo_bound && c.1 <= hi_bound).collect();
    let base = inside.iter().map(|c| c.2).fold(peak.gamma_over_gamma0, f64::min);
    let half = 0.5 * (peak.gamma_over_gamma0 + base);
    let left = curve[..k].iter().rev().take_while(|c| c.1 >= lo_bound).find(|c| c.2 < half).map(|c| peak.omega_rad_s - c.1);
    let right = curve[k + 1..].iter().take_while(|c| c.1 <= hi_bound).find(|c| c.2 < half).map(|c| c.1 - peak.omega_rad_s);
    let hw = match (left, right) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => (hi_bound - lo_bound) / 6.0,
    };
    let a = (peak.omega_rad_s - 3.0 * hw).max(lo_bound);
    let b = (peak.omega_rad_s + 3.0 * hw).min(hi_bound);
    let cluster = scene.cluster(out.l_max)?;
    let emitters = scene.emitters();
    let local = run_grid(scene, &cluster, &emitters, &linear_grid(a, b, LOCAL_POINTS), opts)?;
    let n = local.emitter_count;
    let mut w = Vec::new();
    let mut g = Vec::new();
    let mut r = Vec::new();
    for row in &local.rows {
        if let Ok(p) = &row.result {
            w.push(row.omega);
            g.push(p.gamma[0]);
            r.push(if n > 1 { p.matrix[1] / p.matrix[0] } else { 0.0 });
        }
    }
    Ok(extract_resonance(&w, &g, &r, (a, b), &FitOptions::default())?)
}

#[derive(Clone, Debug)]
pub struct DynamicsOutput {
    pub peak: PeakInfo,
    pub resonance: ResonanceParams<f64>,
    pub mode: CollectiveMode<f64>,
    pub trace: EntanglementTrace<f64>,
    pub l_max: usize,
    /// Free-space rate of emitter 0 at `ω_m`, 1/s.
    pub free_rate: f64,
    /// Beat envelope lifetime `2/δω_m`, s.
    pub envelope_lifetime_s: f64,
}

impl DynamicsOutput {
    /// `(2/δω_m) Γ₀`.
    pub fn lifetime_over_free_decay(&self) -> f64 {
        self.envelope_lifetime_s * self.free_rate
    }
}

fn mode_name(kind: ModeKind) -> &'static str {
    match kind {
        ModeKind::Superradiant => "superradiant",
        ModeKind::Subradiant => "subradiant",
    }
}

/// Resonance, coupling check and entanglement trace for a peak of an
/// existing sweep. Weak coupling is refused with the measured `Ω/δω_m`.
pub fn dynamics_from_sweep(scene: &Scene, out: &SweepOutput, selector: PeakSelector, opts: &RunOptions) -> Result<DynamicsOutput, SceneError> {
    let peaks = out.peaks();
    let peak = selector
        .select(&peaks)
        .ok_or_else(|| SceneError::Refused(format!("no peak matches {selector:?} ({} detected)", peaks.len())))?;
    let rp = resolve_resonance(scene, out, &peak, opts)?;
    let n = scene.emitters.len();
    if n < 2 {
        return Err(SceneError::Invalid("entanglement dynamics needs at least two emitters".into()));
    }
    if classify_coupling(&rp) == Coupling::Weak {
        return Err(SceneError::Refused(format!(
            "weak coupling at ω_m = {:.4e} rad/s: Ω/δω_m = {:.3} is below {STRONG_COUPLING_RATIO}",
            rp.omega_m,
            rp.coupling_ratio()
        )));
    }
    let mode = CollectiveMode::for_resonance(n, rp.gamma_ratio);
    let spec = &scene.dynamics;
    let mut cfg = DynamicsConfig::uniform(spec.t_max_over_delta / rp.delta_omega_m, spec.samples);
    cfg.delta_t = spec.delta_t_fs * 1e-15;
    cfg.detuning = spec.detuning_thz_angular * 1e12;
    let trace = if cfg.detuning == 0.0 {
        entanglement_trace(&mode, &rp, &cfg)?
    } else {
        let k = integrate_kernel(&mode, &rp, &cfg, &KernelOptions::default())?;
        trace_from_amplitude(&mode_state(&mode)?, &cfg.t_grid, &k.amplitude)?
    };
    let free_rate = free_space_rate(rp.omega_m, scene.emitters()[0].dipole.norm());
    Ok(DynamicsOutput {
        peak,
        resonance: rp,
        mode,
        trace,
        l_max: out.l_max,
        free_rate,
        envelope_lifetime_s: 2.0 / rp.delta_omega_m,
    })
}

fn write_trace(dynamics: &DynamicsOutput, path: &Path) -> Result<(), SceneError> {
    let tr = &dynamics.trace;
    let mut w = csv::Writer::from_path(path).map_err(|e| SceneError::io(path, e))?;
    w.write_record(["t_s", "p", "e_g", "concurrence", "delta_omega_t"]).map_err(|e| SceneError::io(path, e))?;
    for i in 0..tr.t.len() {
        let conc = tr.concurrence.as_ref().map_or(String::new(), |c| format!("{:e}", c[i]));
        w.write_record([
            format!("{:e}", tr.t[i]),
            format!("{:e}", tr.p[i]),
            format!("{:e}", tr.e_g[i]),
            conc,
            format!("{:e}", tr.t[i] * dynamics.resonance.delta_omega_m),
        ])
        .map_err(|e| SceneError::io(path, e))?;
    }
    w.flush().map_err(|e| SceneError::io(path, e))
}

fn dynamics_meta(scene: &Scene, d: &DynamicsOutput) -> serde_json::Value {
    json!({
        "kind": "trace",
        "provenance": provenance(scene),
        "l_max": d.l_max,
        "peak": d.peak,
        "resonance": d.resonance,
        "coupling_ratio": d.resonance.coupling_ratio(),
        "mode": mode_name(d.mode.kind),
        "g": d.mode.g,
        "state": d.trace.state,
        "max_p": d.trace.max_p(),
        "max_e_g": d.trace.max_e_g(),
        "t_max_e_g_s": d.trace.argmax_e_g(),
        "free_rate_per_s": d.free_rate,
        "envelope_lifetime_s": d.envelope_lifetime_s,
        "envelope_lifetime_over_free_decay_time": d.lifetime_over_free_decay(),
    })
}

/// Sweep, select a peak, and write its entanglement trace CSV and sidecar.
pub fn run_dynamics(scene: &Scene, selector: PeakSelector, opts: &RunOptions, path: &Path) -> Result<DynamicsOutput, SceneError> {
    let quiet = RunOptions { convergence_check: false, ..opts.clone() };
    let out = compute_sweep(scene, &quiet)?;
    let d = dynamics_from_sweep(scene, &out, selector, opts)?;
    write_trace(&d, path)?;
    write_json(&sidecar_path(path), &dynamics_meta(scene, &d))?;
    Ok(d)
}

/// Where a field maximum sits relative to the spheres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "region")]
pub enum Hotspot {
    /// Between two spheres whose surface gap is below the smallest radius,
    /// within half that radius of their axis.
    Gap { first: usize, second: usize },
    /// Within a quarter radius of a sphere surface, outside any gap.
    Surface { sphere: usize },
    Exterior,
}

pub fn classify_point(cluster: &SphereCluster, r: &Vec3<f64>) -> Hotspot {
    let rmin = cluster.spheres.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
    for (i, a) in cluster.spheres.iter().enumerate() {
        for (j, b) in cluster.spheres.iter().enumerate().skip(i + 1) {
            let axis = b.center - a.center;
            let len = axis.norm();
            if len - a.radius - b.radius > rmin {
                continue;
            }
            let u = axis * (1.0 / len);
            let rel = *r - a.center;
            let s = rel.dot(&u);
            let lateral = (rel - u * s).norm();
            if s > 0.0 && s < len && lateral <= 0.5 * rmin {
                return Hotspot::Gap { first: i, second: j };
            }
        }
    }
    for (i, s) in cluster.spheres.iter().enumerate() {
        if (*r - s.center).norm() - s.radius <= 0.25 * s.radius {
            return Hotspot::Surface { sphere: i };
        }
    }
    Hotspot::Exterior
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMapSummary {
    pub max_abs_e: f64,
    pub max_point_m: [f64; 3],
    pub max_region: Hotspot,
    /// Largest `|E|` inside any gap region (0 without gaps).
    pub gap_max_abs_e: f64,
    /// Largest `|E|` outside the gap regions.
    pub outside_gap_max_abs_e: f64,
}

pub fn fieldmap_summary(cluster: &SphereCluster, map: &FieldMap) -> FieldMapSummary {
    let n = map.resolution;
    let (mut gap, mut outside) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let v = map.get(i, j);
            if v == MASKED {
                continue;
            }
            match classify_point(cluster, &map.plane.point(i, j, n)) {
                Hotspot::Gap { .. } => gap = gap.max(v),
                _ => outside = outside.max(v),
            }
        }
    }
    let (i, j, v) = map.argmax().unwrap_or((0, 0, 0.0));
    let p = map.plane.point(i, j, n);
    FieldMapSummary {
        max_abs_e: v,
        max_point_m: p.as_array(),
        max_region: classify_point(cluster, &p),
        gap_max_abs_e: gap,
        outside_gap_max_abs_e: outside,
    }
}

#[derive(Clone, Debug)]
pub struct FieldMapOutput {
    pub map: FieldMap,
    pub summary: FieldMapSummary,
    pub l_max: usize,
    pub wall_time_s: f64,
}

/// `|E|` of plane-wave illumination on `plane` (default: the xz plane
/// through the cluster with a 5 nm margin). Writes `x_m,y_m,z_m,abs_e`
/// rows, `abs_e = −1` inside spheres.
pub fn run_fieldmap(
    scene: &Scene,
    omega: f64,
    plane: Option<PlaneSpec>,
    resolution: usize,
    opts: &RunOptions,
    path: Option<&Path>,
) -> Result<FieldMapOutput, SceneError> {
    let start = Instant::now();
    let l_max = opts.l_max_for(scene);
    let cluster = scene.cluster(l_max)?;
    let ill = scene.illumination.clone().unwrap_or_else(|| scene.default_illumination());
    let pw = scene.plane_wave(&ill, omega)?;
    let plane = plane.unwrap_or_else(|| PlaneSpec::xz_through(&cluster, 5e-9));
    let map = field_map(&cluster, &pw, &plane, resolution)?;
    let summary = fieldmap_summary(&cluster, &map);
    let out = FieldMapOutput { map, summary, l_max, wall_time_s: start.elapsed().as_secs_f64() };
    if let Some(path) = path {
        let mut w = csv::Writer::from_path(path).map_err(|e| SceneError::io(path, e))?;
        w.write_record(["x_m", "y_m", "z_m", "abs_e"]).map_err(|e| SceneError::io(path, e))?;
        for i in 0..resolution {
            for j in 0..resolution {
                let p = out.map.plane.point(i, j, resolution);
                w.write_record([p.x, p.y, p.z, out.map.get(i, j)].map(|v| format!("{v:e}")))
                    .map_err(|e| SceneError::io(path, e))?;
            }
        }
        w.flush().map_err(|e| SceneError::io(path, e))?;
        let meta = json!({
            "kind": "heatmap",
            "provenance": provenance(scene),
            "l_max": l_max,
            "omega_rad_s": omega,
            "illumination": ill,
            "plane": out.map.plane,
            "resolution": resolution,
            "masked_value": MASKED,
            "summary": out.summary,
            "wall_time_s": out.wall_time_s,
        });
        write_json(&sidecar_path(path), &meta)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FigureOptions {
    pub run: RunOptions,
    pub sweep_points: usize,
    pub field_resolution: usize,
    pub radius_nm: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self { run: RunOptions::default(), sweep_points: 200, field_resolution: 200, radius_nm: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelStatus {
    Ok,
    Refused,
    Partial,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub file: Option<String>,
    pub status: PanelStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_rad_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub id: String,
    /// `trace`, `spectrum` or `heatmap`.
    pub kind: String,
    pub title: String,
    pub x_column: String,
    pub y_column: String,
    pub status: PanelStatus,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub crate_version: String,
    pub materials: Vec<String>,
    pub panels: Vec<Panel>,
}

impl Manifest {
    pub fn panel(&self, id: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.id == id)
    }
}

fn panel(id: &str, kind: &str, title: &str, x: &str, y: &str, series: Vec<Series>) -> Panel {
    let ok = series.iter().filter(|s| s.status == PanelStatus::Ok).count();
    let refused = series.iter().filter(|s| s.status == PanelStatus::Refused).count();
    let status = if ok == series.len() {
        PanelStatus::Ok
    } else if refused == series.len() {
        PanelStatus::Refused
    } else if ok + refused == series.len() || ok > 0 {
        PanelStatus::Partial
    } else {
        PanelStatus::Failed
    };
    Panel { id: id.into(), kind: kind.into(), title: title.into(), x_column: x.into(), y_column: y.into(), status, series }
}

fn failed(label: &str, e: &SceneError) -> Series {
    let status = if matches!(e, SceneError::Refused(_)) { PanelStatus::Refused } else { PanelStatus::Failed };
    Series { label: label.into(), file: None, status, message: Some(e.to_string()), omega_rad_s: None }
}

/// Every spectrum, trace and field map of the standard preset matrix,
/// written into `dir` with a `manifest.json` listing 14 panels.
pub fn reproduce_figures(dir: &Path, opts: &FigureOptions) -> Result<Manifest, SceneError> {
    std::fs::create_dir_all(dir).map_err(|e| SceneError::io(dir, e))?;
    let r = opts.radius_nm;
    let run = RunOptions { grid: None, ..opts.run.clone() };
    let cases: [(PresetKind, f64); 8] = [
        (PresetKind::LinearTrimer, 1.0),
        (PresetKind::LinearTrimer, 2.0),
        (PresetKind::LinearTrimer, 4.0),
        (PresetKind::SingleSpherePair, 1.0),
        (PresetKind::TriangleTrio, 1.0),
        (PresetKind::TriangleTrio, 2.0),
        (PresetKind::TriangleTrio, 4.0),
        (PresetKind::TetraPlusCenter, 1.0),
    ];
    let mut spectra: Vec<(PresetKind, f64, Result<(Scene, SweepOutput), SceneError>, String)> = Vec::new();
    let mut materials = Vec::new();
    for (kind, d) in cases {
        let file = format!("spectrum_{}_d{d}.csv", kind.name());
        let res = (|| {
            let mut scene = Scene::preset(kind, r, d)?;
            scene.sweep.points = opts.sweep_points;
            materials.extend(scene.provenance()?);
            let out = run_sweep(&scene, &run, &dir.join(&file))?;
            Ok((scene, out))
        })();
        spectra.push((kind, d, res, file));
    }
    materials.sort();
    materials.dedup();

    let find = |kind: PresetKind, d: f64| spectra.iter().find(|s| s.0 == kind && s.1 == d);
    let spectrum_series = |kind: PresetKind, d: f64, label: &str| -> Series {
        match find(kind, d) {
            Some((_, _, Ok(_), file)) => {
                Series { label: label.into(), file: Some(file.clone()), status: PanelStatus::Ok, message: None, omega_rad_s: None }
            }
            Some((_, _, Err(e), _)) => failed(label, e),
            None => Series { label: label.into(), file: None, status: PanelStatus::Failed, message: Some("not computed".into()), omega_rad_s: None },
        }
    };
    let trace_series = |kind: PresetKind, d: f64, nominal: f64, tag: &str, label: &str| -> Series {
        let Some((_, _, res, _)) = find(kind, d) else {
            return Series { label: label.into(), file: None, status: PanelStatus::Failed, message: Some("not computed".into()), omega_rad_s: None };
        };
        let result = match res {
            Ok((scene, out)) => (|| {
                let dyn_out = dynamics_from_sweep(scene, out, PeakSelector::Nearest(nominal * 1e12), &run)?;
                let file = format!("{tag}.csv");
                write_trace(&dyn_out, &dir.join(&file))?;
                write_json(&dir.join(format!("{tag}.json")), &dynamics_meta(scene, &dyn_out))?;
                Ok((file, dyn_out.resonance.omega_m))
            })(),
            Err(e) => Err(SceneError::Invalid(format!("spectrum failed: {e}"))),
        };
        match result {
            Ok((file, w)) => Series { label: label.into(), file: Some(file), status: PanelStatus::Ok, message: None, omega_rad_s: Some(w) },
            Err(e) => failed(label, &e),
        }
    };
    let field_series = |nominal: f64, tag: &str, label: &str| -> Series {
        let result = (|| {
            let Some((_, _, Ok((scene, out)), _)) = find(PresetKind::LinearTrimer, 1.0) else {
                return Err(SceneError::Invalid("trimer d=1 nm spectrum unavailable".into()));
            };
            let omega = PeakSelector::Nearest(nominal * 1e12)
                .select(&out.peaks())
                .filter(|p| (p.omega_rad_s / (nominal * 1e12) - 1.0).abs() < 0.05)
                .map_or(nominal * 1e12, |p| p.omega_rad_s);
            let file = format!("{tag}.csv");
            run_fieldmap(scene, omega, None, opts.field_resolution, &run, Some(&dir.join(&file)))?;
            Ok((file, omega))
        })();
        match result {
            Ok((file, w)) => Series { label: label.into(), file: Some(file), status: PanelStatus::Ok, message: None, omega_rad_s: Some(w) },
            Err(e) => failed(label, &e),
        }
    };

    use PresetKind::*;
    let fig2_series = || {
        vec![
            spectrum_series(LinearTrimer, 1.0, "d=1 nm"),
            spectrum_series(LinearTrimer, 2.0, "d=2 nm"),
            spectrum_series(LinearTrimer, 4.0, "d=4 nm"),
            spectrum_series(SingleSpherePair, 1.0, "single sphere"),
        ]
    };
    let tri_series = || {
        vec![
            spectrum_series(TriangleTrio, 1.0, "d=1 nm"),
            spectrum_series(TriangleTrio, 2.0, "d=2 nm"),
            spectrum_series(TriangleTrio, 4.0, "d=4 nm"),
        ]
    };
    let (t, tr) = ("t_s", "e_g");
    let (w, g, ab) = ("omega_rad_s", "gamma_over_gamma0", "gamma_ab_over_gamma");
    let panels = vec![
        panel("fig1a", "trace", "trimer, d=4 nm", t, tr, vec![trace_series(LinearTrimer, 4.0, 4920.0, "fig1a_trimer_d4_w1", "ω₁")]),
        panel(
            "fig1b",
            "trace",
            "trimer, d=2 nm",
            t,
            tr,
            vec![
                trace_series(LinearTrimer, 2.0, 4770.0, "fig1b_trimer_d2_w1", "ω₁"),
                trace_series(LinearTrimer, 2.0, 5010.0, "fig1b_trimer_d2_w2", "ω₂"),
            ],
        ),
        panel(
            "fig1c",
            "trace",
            "trimer, d=1 nm",
            t,
            tr,
            vec![
                trace_series(LinearTrimer, 1.0, 4530.0, "fig1c_trimer_d1_w1", "ω₁"),
                trace_series(LinearTrimer, 1.0, 4800.0, "fig1c_trimer_d1_w2", "ω₂"),
            ],
        ),
        panel("fig2a", "spectrum", "decay rate, trimer", w, g, fig2_series()),
        panel("fig2b", "spectrum", "interference term, trimer", w, ab, fig2_series()),
        panel("fig3a", "heatmap", "|E|, trimer d=1 nm, ω₃", "x_m", "z_m", vec![field_series(5470.0, "fig3a_field_w3", "ω₃")]),
        panel("fig3b", "heatmap", "|E|, trimer d=1 nm, ω₁", "x_m", "z_m", vec![field_series(4530.0, "fig3b_field_w1", "ω₁")]),
        panel("fig3c", "heatmap", "|E|, trimer d=1 nm, ω₂", "x_m", "z_m", vec![field_series(4800.0, "fig3c_field_w2", "ω₂")]),
        panel(
            "fig4a",
            "trace",
            "triangle, d=1 nm",
            t,
            tr,
            vec![
                trace_series(TriangleTrio, 1.0, 4460.0, "fig4a_triangle_d1_w1", "ω₁"),
                trace_series(TriangleTrio, 1.0, 4710.0, "fig4a_triangle_d1_w2", "ω₂"),
            ],
        ),
        panel("fig4b", "spectrum", "decay rate, triangle", w, g, tri_series()),
        panel("fig4c", "spectrum", "interference term, triangle", w, ab, tri_series()),
        panel(
            "fig5a",
            "trace",
            "tetrahedron plus centre, d=1 nm",
            t,
            tr,
            vec![
                trace_series(TetraPlusCenter, 1.0, 4540.0, "fig5a_tetra_d1_w1", "ω₁"),
                trace_series(TetraPlusCenter, 1.0, 4950.0, "fig5a_tetra_d1_w2", "ω₂"),
            ],
        ),
        panel("fig5b", "spectrum", "decay rate, tetrahedron plus centre", w, g, vec![spectrum_series(TetraPlusCenter, 1.0, "d=1 nm")]),
        panel("fig5c", "spectrum", "interference term, tetrahedron plus centre", w, ab, vec![spectrum_series(TetraPlusCenter, 1.0, "d=1 nm")]),
    ];
    let manifest = Manifest { schema: "hotspot-figures/1".into(), crate_version: env!("CARGO_PKG_VERSION").into(), materials, panels };
    write_json(&dir.join("manifest.json"), &serde_json::to_value(&manifest).expect("manifest serializes"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("hotspot-pipeline-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn empty_cluster_sweep_is_flat() {
        let scene = Scene::from_json(
            r#"{"spheres":[],"emitters":[{"position_nm":[0,0,0],"direction":[0,0,1]},{"position_nm":[30,0,0],"direction":[0,0,1]}],
                "sweep":{"omega_min_thz_angular":4000,"omega_max_thz_angular":5000,"points":5}}"#,
        )
        .unwrap();
        let dir = tmp("empty");
        let out = run_sweep(&scene, &RunOptions::default(), &dir.join("s.csv")).unwrap();
        for c in out.curve() {
            assert!((c.2 - 1.0).abs() < 1e-12);
        }
        assert!(out.peaks().is_empty());
        let text = std::fs::read_to_string(dir.join("s.csv")).unwrap();
        assert!(text.starts_with("omega_rad_s,gamma_over_gamma0,gamma_ab_over_gamma,gamma_over_gamma0_1,gamma_s,error"));
        assert_eq!(text.lines().count(), 6);
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("s.json")).unwrap()).unwrap();
        assert_eq!(meta["provenance"]["scene_hash"], scene.hash());
    }

    #[test]
    fn empty_cluster_field_is_uniform() {
        let scene = Scene::from_json(r#"{"spheres":[],"emitters":[]}"#).unwrap();
        let plane = PlaneSpec { center: Vec3::zero(), u: Vec3::unit_x(), v: Vec3::unit_z(), half_u: 2e-8, half_v: 2e-8 };
        let out = run_fieldmap(&scene, 4.5e15, Some(plane), 9, &RunOptions::default(), None).unwrap();
        assert!(out.map.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn hotspot_regions() {
        let scene = Scene::preset(PresetKind::LinearTrimer, 10.0, 1.0).unwrap();
        let c = scene.cluster(4).unwrap();
        assert_eq!(classify_point(&c, &Vec3::new(10.5e-9, 0.0, 0.0)), Hotspot::Gap { first: 1, second: 2 });
        assert_eq!(classify_point(&c, &Vec3::new(0.0, 0.0, 11e-9)), Hotspot::Surface { sphere: 1 });
        assert_eq!(classify_point(&c, &Vec3::new(32e-9, 0.0, 0.0)), Hotspot::Surface { sphere: 2 });
        assert_eq!(classify_point(&c, &Vec3::new(0.0, 0.0, 30e-9)), Hotspot::Exterior);
    }

    #[test]
    fn selectors() {
        let p = |w: f64, g: f64| PeakInfo { index: 0, omega_rad_s: w, gamma_over_gamma0: g, gamma_ab_over_gamma: 0.0 };
        let peaks = [p(1.0, 5.0), p(2.0, 9.0), p(3.0, 1.0)];
        assert_eq!(PeakSelector::Index(2).select(&peaks).unwrap().omega_rad_s, 3.0);
        assert_eq!(PeakSelector::Nearest(1.4).select(&peaks).unwrap().omega_rad_s, 1.0);
        assert_eq!(PeakSelector::Strongest.select(&peaks).unwrap().omega_rad_s, 2.0);
        assert!(PeakSelector::Index(3).select(&peaks).is_none());
    }
}
