//! Single-excitation dynamics of collective emitter states coupled to one
//! plasmon quasi-mode.
//!
//! The mode is described by a Lorentzian kernel
//! `K(τ) = −(g/2) Γ δ e^{−i(ω_m−ω_A)τ} e^{−δ|τ|}` acting on the amplitude of
//! a collective state whose decay rate is `g Γ`. The field is prepared by an
//! auxiliary emitter before `t = 0`; its influence enters as the source
//! `S(t) = S₀ e^{−(δ + i(ω_m−ω_A)) t}` (the kernel's memory of the
//! preparation interval), with `S₀` fixed so that the resonant closed form
//! is reproduced exactly.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::numerics::Real;

/// `Ω / δω_m` at or above which coupling counts as strong.
pub const STRONG_COUPLING_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("no local maximum of the decay rate inside the fit window")]
    NoPeak,
    #[error("Lorentzian fit residual {residual:e} exceeds {limit:e}")]
    PoorFit { residual: f64, limit: f64 },
    #[error("overdamped regime: g·Ω² = {g_rabi2:e} ≤ δω_m² = {delta2:e}; the closed form does not apply")]
    Overdamped { g_rabi2: f64, delta2: f64 },
    #[error("closed form needs exact resonance, detuning is {detuning:e} rad/s")]
    Detuned { detuning: f64 },
    #[error("weak coupling: Ω/δω_m = {ratio:.3} is below {threshold}")]
    WeakCoupling { ratio: f64, threshold: f64 },
    #[error("kernel integration did not reach accuracy {tolerance:e} (Richardson estimate {estimate:e})")]
    Accuracy { estimate: f64, tolerance: f64 },
    #[error("invalid dynamics input: {0}")]
    Invalid(String),
}

/// Parameters of one plasmon resonance as seen by an emitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams<T> {
    /// rad/s.
    pub omega_m: T,
    /// Half width at half maximum, rad/s.
    pub delta_omega_m: T,
    /// Single-emitter decay rate at the peak, 1/s.
    pub gamma: T,
    /// `Γ_AB / Γ` at `ω_m`.
    pub gamma_ratio: T,
    /// `Ω = √(2 Γ δω_m)`, rad/s.
    pub rabi: T,
    /// Relative RMS residual of the fit (zero when not fitted).
    pub fit_residual: T,
}

impl<T: Real> ResonanceParams<T> {
    pub fn new(omega_m: T, delta_omega_m: T, gamma: T, gamma_ratio: T) -> Self {
        let rabi = (T::lit(2.0) * gamma * delta_omega_m).max(T::zero()).sqrt();
        Self { omega_m, delta_omega_m, gamma, gamma_ratio, rabi, fit_residual: T::zero() }
    }

    /// Parameters with a prescribed `Ω/δω_m`.
    pub fn with_ratio(omega_m: T, delta_omega_m: T, ratio: T, gamma_ratio: T) -> Self {
        let rabi = ratio * delta_omega_m;
        Self::new(omega_m, delta_omega_m, rabi * rabi / (T::lit(2.0) * delta_omega_m), gamma_ratio)
    }

    pub fn coupling_ratio(&self) -> T {
        self.rabi / self.delta_omega_m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig<T> {
    /// Field-preparation interval, s.
    pub delta_t: T,
    /// `ω_A − ω_m`, rad/s.
    pub detuning: T,
    /// Ascending sample times starting at 0, s.
    pub t_grid: Vec<T>,
}

impl<T: Real> DynamicsConfig<T> {
    /// Resonant, instantaneous preparation, `n` samples over `[0, t_max]`.
    pub fn uniform(t_max: T, n: usize) -> Self {
        let t_grid = (0..n).map(|i| t_max * T::of_usize(i) / T::of_usize(n.max(2) - 1)).collect();
        Self { delta_t: T::zero(), detuning: T::zero(), t_grid }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.delta_t >= T::zero()) {
            return Err(DynamicsError::Invalid("preparation interval must be non-negative".into()));
        }
        if self.t_grid.first().is_some_and(|t| *t != T::zero()) {
            return Err(DynamicsError::Invalid("time grid must start at 0".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DynamicsError::Invalid("time grid must be strictly ascending".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Superradiant,
    Subradiant,
}

/// Collective single-excitation state with decay rate `g Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMode<T> {
    pub g: T,
    pub kind: ModeKind,
    /// Number of emitters.
    pub emitters: usize,
}

impl<T: Real> CollectiveMode<T> {
    /// Symmetric state of `n` emitters, `g = 1 + (n−1)γ`.
    pub fn superradiant(n: usize, gamma_ratio: T) -> Self {
        Self { g: T::one() + T::of_usize(n.saturating_sub(1)) * gamma_ratio, kind: ModeKind::Superradiant, emitters: n }
    }

    /// States orthogonal to the symmetric one, `g = 1 − γ`.
    pub fn subradiant(n: usize, gamma_ratio: T) -> Self {
        Self { g: T::one() - gamma_ratio, kind: ModeKind::Subradiant, emitters: n }
    }

    /// The bright branch at a resonance: symmetric for `γ > 0`, otherwise
    /// the antisymmetric family.
    pub fn for_resonance(n: usize, gamma_ratio: T) -> Self {
        if gamma_ratio > T::zero() {
            Self::superradiant(n, gamma_ratio)
        } else {
            Self::subradiant(n, gamma_ratio)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Weak,
    Strong,
}

/// Strong iff `Ω/δω_m ≥ 10`, boundary included.
pub fn classify_coupling<T: Real>(rp: &ResonanceParams<T>) -> Coupling {
    if rp.rabi >= T::lit(STRONG_COUPLING_RATIO) * rp.delta_omega_m {
        Coupling::Strong
    } else {
        Coupling::Weak
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Largest accepted RMS residual relative to the fitted peak height.
    pub max_residual: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_residual: 0.05, max_iterations: 500 }
    }
}

/// Indices of local maxima whose prominence is at least `min_prominence`
/// times the largest value.
pub fn find_peaks<T: Real>(y: &[T], min_prominence: T) -> Vec<usize> {
    let top = y.iter().fold(T::zero(), |a, v| a.max(*v));
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let side_min = |range: &mut dyn Iterator<Item = usize>| {
            let mut lo = y[i];
            for j in range {
                if y[j] > y[i] {
                    break;
                }
                lo = lo.min(y[j]);
            }
            lo
        };
        let left = side_min(&mut (0..i).rev());
        let right = side_min(&mut (i + 1..y.len()));
        if y[i] - left.max(right) >= min_prominence * top {
            out.push(i);
        }
    }
    out
}

/// Linear interpolation of `y(x)` at `x0`, clamped to the ends.
pub fn interpolate<T: Real>(x: &[T], y: &[T], x0: T) -> T {
    let j = x.partition_point(|v| *v <= x0);
    if j == 0 {
        return y[0];
    }
    if j >= x.len() {
        return y[x.len() - 1];
    }
    let t = (x0 - x[j - 1]) / (x[j] - x[j - 1]);
    y[j - 1] + t * (y[j] - y[j - 1])
}

const NP: usize = 5;

/// Lorentzian on a sloped baseline, `A δ² / ((x − x₀)² + δ²) + b + s x`,
/// and its parameter gradient.
fn lorentz<T: Real>(p: &[T; NP], x: T) -> (T, [T; NP]) {
    let [a, x0, d, b, s] = *p;
    let u = x - x0;
    let den = u * u + d * d;
    let l = d * d / den;
    let two = T::lit(2.0);
    (a * l + b + s * x, [l, a * two * u * d * d / (den * den), a * two * d * u * u / (den * den), T::one(), x])
}

fn solve_small<T: Real>(mut m: [[T; NP]; NP], mut r: [T; NP]) -> Option<[T; NP]> {
    for c in 0..NP {
        let piv = (c..NP).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[piv][c] == T::zero() {
            return None;
        }
        m.swap(c, piv);
        r.swap(c, piv);
        for i in (c + 1)..NP {
            let f = m[i][c] / m[c][c];
            for j in c..NP {
                m[i][j] = m[i][j] - f * m[c][j];
            }
            r[i] = r[i] - f * r[c];
        }
    }
    let mut x = [T::zero(); NP];
    for c in (0..NP).rev() {
        let mut s = r[c];
        for j in (c + 1)..NP {
            s = s - m[c][j] * x[j];
        }
        x[c] = s / m[c][c];
    }
    Some(x)
}

/// Fit `Γ(ω) ≈ Γ_pk δ²/((ω−ω_m)² + δ²) + baseline` to the samples inside
/// `window` and attach `Γ_AB/Γ` interpolated at the fitted `ω_m`.
/// The baseline may be sloped. The reported `Γ` is the fitted curve at
/// `ω_m` (`Γ_pk` plus baseline).
pub fn extract_resonance<T: Real>(
    omega: &[T],
    gamma: &[T],
    ratio: &[T],
    window: (T, T),
    options: &FitOptions,
) -> Result<ResonanceParams<T>, DynamicsError> {
    if omega.len() != gamma.len() || omega.len() != ratio.len() {
        return Err(DynamicsError::Invalid("sweep columns differ in length".into()));
    }
    let idx: Vec<usize> = (0..omega.len()).filter(|&i| omega[i] >= window.0 && omega[i] <= window.1).collect();
    if idx.len() < 5 {
        return Err(DynamicsError::NoPeak);
    }
    let (xs, ys): (Vec<T>, Vec<T>) = idx.iter().map(|&i| (omega[i], gamma[i])).unzip();
    let local = find_peaks(&ys, T::zero());
    let peak = local
        .iter()
        .copied()
        .max_by(|&a, &b| ys[a].partial_cmp(&ys[b]).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or(DynamicsError::NoPeak)?;

    // scaled coordinates: x ∈ [−1, 1], y ∈ [0, 1]
    let centre = (xs[0] + xs[xs.len() - 1]) / T::lit(2.0);
    let half = (xs[xs.len() - 1] - xs[0]) / T::lit(2.0);
    let ymax = ys[peak];
    let ymin = ys.iter().fold(ymax, |a, v| a.min(*v));
    let sx: Vec<T> = xs.iter().map(|x| (*x - centre) / half).collect();
    let sy: Vec<T> = ys.iter().map(|y| *y / ymax).collect();
    let base0 = ymin / ymax;
    let half_level = (T::one() + base0) / T::lit(2.0);
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<T> {
        let mut prev = peak;
        for j in range {
            if sy[j] < half_level {
                let t = (sy[prev] - half_level) / (sy[prev] - sy[j]);
                return Some((sx[prev] + t * (sx[j] - sx[prev]) - sx[peak]).abs());
            }
            prev = j;
        }
        None
    };
    let hw = match (crossing(&mut (0..peak).rev()), crossing(&mut (peak + 1..sx.len()))) {
        (Some(a), Some(b)) => (a + b) / T::lit(2.0),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => T::lit(0.2),
    };
    let mut p = [T::one() - base0, sx[peak], hw.max(T::lit(1e-6)), base0, T::zero()];
    let cost = |p: &[T; NP]| sx.iter().zip(&sy).fold(T::zero(), |a, (x, y)| a + (lorentz(p, *x).0 - *y).powi(2));
    let mut c = cost(&p);
    let mut lambda = T::lit(1e-3);
    for _ in 0..options.max_iterations {
        let mut jtj = [[T::zero(); NP]; NP];
        let mut jtr = [T::zero(); NP];
        for (x, y) in sx.iter().zip(&sy) {
            let (f, g) = lorentz(&p, *x);
            let r = *y - f;
            for a in 0..NP {
                jtr[a] = jtr[a] + g[a] * r;
                for b in 0..NP {
                    jtj[a][b] = jtj[a][b] + g[a] * g[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] = row[a] * (T::one() + lambda) + T::lit(1e-300);
            }
            let Some(step) = solve_small(m, jtr) else { break };
            let mut trial = p;
            for a in 0..NP {
                trial[a] = trial[a] + step[a];
            }
            trial[2] = trial[2].abs();
            let ct = cost(&trial);
            if ct <= c {
                let change = step.iter().zip(&p).fold(T::zero(), |a, (s, v)| a.max(s.abs() / v.abs().max(T::lit(1e-3))));
                p = trial;
                c = ct;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                accepted = true;
                if change < T::lit(1e-14) {
                    lambda = T::zero();
                }
                break;
            }
            lambda = lambda * T::lit(10.0);
        }
        if !accepted || lambda == T::zero() {
            break;
        }
    }
    let [a, x0, d, b, slope] = p;
    // a resonance must sit inside the window and be narrower than it
    if !(a > T::zero()) || !(d > T::zero()) || d > T::one() || x0.abs() > T::one() {
        return Err(DynamicsError::NoPeak);
    }
    let residual = (c / T::of_usize(sx.len())).sqrt() / a;
    if residual > T::lit(options.max_residual) {
        return Err(DynamicsError::PoorFit { residual: residual.to_f64().unwrap_or(f64::NAN), limit: options.max_residual });
    }
    let omega_m = centre + x0 * half;
    let delta = d * half;
    let peak_rate = (a + b + slope * x0) * ymax;
    let mut rp = ResonanceParams::new(omega_m, delta, peak_rate, interpolate(omega, ratio, omega_m));
    rp.fit_residual = residual;
    Ok(rp)
}

/// `S₀`, the initial slope `Ċ(0)`.
pub fn source_amplitude<T: Real>(mode: &CollectiveMode<T>, rp: &ResonanceParams<T>, delta_t: T) -> T {
    let (w, d) = (rp.rabi, rp.delta_omega_m);
    let e = (-d * delta_t / T::lit(2.0)).exp();
    mode.g.max(T::zero()).sqrt() * w * w * (d * e - w) * e / (T::lit(2.0) * (w * w + d * d))
}

/// Beat frequency `√(gΩ² − δω_m²)`.
pub fn beat_frequency<T: Real>(mode: &CollectiveMode<T>, rp: &ResonanceParams<T>) -> Result<T, DynamicsError> {
    let g2 = mode.g * rp.rabi * rp.rabi;
    let d2 = rp.delta_omega_m * rp.delta_omega_m;
    if !(g2 > d2) {
        return Err(DynamicsError::Overdamped {
            g_rabi2: g2.to_f64().unwrap_or(f64::NAN),
            delta2: d2.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((g2 - d2).sqrt())
}

/// Closed-form amplitude at exact resonance:
/// `C(t) = √g Ω²(δ e^{−δΔt/2} − Ω) / ((Ω² + δ²) √(gΩ² − δ²)) · e^{−δ(t+Δt)/2} sin(√(gΩ² − δ²) t / 2)`.
pub fn amplitude<T: Real>(
    mode: &CollectiveMode<T>,
    rp: &ResonanceParams<T>,
    cfg: &DynamicsConfig<T>,
) -> Result<Vec<Complex<T>>, DynamicsError> {
    cfg.validate()?;
    if cfg.detuning != T::zero() {
        return Err(DynamicsError::Detuned { detuning: cfg.detuning.to_f64().unwrap_or(f64::NAN) });
    }
    let lam = beat_frequency(mode, rp)?;
    let (w, d) = (rp.rabi, rp.delta_omega_m);
    let two = T::lit(2.0);
    let coef = mode.g.sqrt() * w * w * (d * (-d * cfg.delta_t / two).exp() - w) / ((w * w + d * d) * lam);
    Ok(cfg
        .t_grid
        .iter()
        .map(|&t| Complex::new(coef * (-d * (t + cfg.delta_t) / two).exp() * (lam * t / two).sin(), T::zero()))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Initial step is `step_factor / max(Ω, δω_m)`.
    pub step_factor: f64,
    /// Accepted Richardson error estimate (absolute, on `C`).
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { step_factor: 0.01, tolerance: 1e-4, max_halvings: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelTrace<T> {
    pub amplitude: Vec<Complex<T>>,
    /// Step used for the returned amplitude, s.
    pub step: T,
    /// `max |C_h − C_{2h}| / 3` over the time grid.
    pub richardson_error: T,
}

/// `(κ, a)` with `K(τ) = −κ e^{−aτ}`.
fn kernel_params<T: Real>(mode: &CollectiveMode<T>, rp: &ResonanceParams<T>, detuning: T) -> (T, Complex<T>) {
    let kappa = mode.g * rp.gamma * rp.delta_omega_m / T::lit(2.0);
    (kappa, Complex::new(rp.delta_omega_m, -detuning))
}

/// Trapezoidal Volterra integration with step `h`, sampled on `t_grid` by
/// cubic Hermite interpolation.
fn volterra_run<T: Real>(kappa: T, a: Complex<T>, s0: T, h: T, t_grid: &[T]) -> Vec<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = Vec::with_capacity(t_grid.len());
    let t_end = t_grid.last().copied().unwrap_or(T::zero());
    let decay = (-a * h).exp();
    let half = T::lit(0.5);
    let src = |t: T| (-a * t).exp() * s0;
    let (mut c, mut q, mut f) = (zero, zero, src(T::zero()));
    let mut t = T::zero();
    let mut next = 0;
    let denom = T::one() + kappa * h * h / T::lit(4.0);
    while next < t_grid.len() {
        while next < t_grid.len() && t_grid[next] <= t {
            out.push(c);
            next += 1;
        }
        if next >= t_grid.len() || t > t_end {
            break;
        }
        let t1 = t + h;
        // I_{n+1} = −κh (e^{−ah} Q_n + C_{n+1}/2), C_0 = 0
        let x = -(decay * q) * (kappa * h) + src(t1);
        let c1 = (c + (f + x) * (h * half)) / denom;
        let q1 = decay * q + c1;
        let f1 = -(decay * q + c1 * half) * (kappa * h) + src(t1);
        while next < t_grid.len() && t_grid[next] <= t1 {
            let s = (t_grid[next] - t) / h;
            let (s2, s3) = (s * s, s * s * s);
            let two = T::lit(2.0);
            let three = T::lit(3.0);
            let h00 = two * s3 - three * s2 + T::one();
            let h10 = s3 - two * s2 + s;
            let h01 = -two * s3 + three * s2;
            let h11 = s3 - s2;
            out.push(c * h00 + f * (h10 * h) + c1 * h01 + f1 * (h11 * h));
            next += 1;
        }
        c = c1;
        q = q1;
        f = f1;
        t = t1;
    }
    out
}

/// Numerical solution of `Ċ = ∫₀ᵗ K(t−t′) C(t′) dt′ + S(t)`, `C(0) = 0`.
/// The step is halved until the Richardson estimate meets the tolerance.
pub fn integrate_kernel<T: Real>(
    mode: &CollectiveMode<T>,
    rp: &ResonanceParams<T>,
    cfg: &DynamicsConfig<T>,
    options: &KernelOptions,
) -> Result<KernelTrace<T>, DynamicsError> {
    cfg.validate()?;
    let (kappa, a) = kernel_params(mode, rp, cfg.detuning);
    let s0 = source_amplitude(mode, rp, cfg.delta_t);
    let scale = rp.rabi.max(rp.delta_omega_m).max(cfg.detuning.abs());
    if !(scale > T::zero()) {
        return Err(DynamicsError::Invalid("need a positive linewidth or Rabi frequency".into()));
    }
    let mut h = T::lit(options.step_factor) / scale;
    let mut coarse = volterra_run(kappa, a, s0, h, &cfg.t_grid);
    let mut estimate = T::infinity();
    for _ in 0..=options.max_halvings {
        h = h / T::lit(2.0);
        let fine = volterra_run(kappa, a, s0, h, &cfg.t_grid);
        estimate = coarse.iter().zip(&fine).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm())) / T::lit(3.0);
        if estimate <= T::lit(options.tolerance) {
            return Ok(KernelTrace { amplitude: fine, step: h, richardson_error: estimate });
        }
        coarse = fine;
    }
    Err(DynamicsError::Accuracy { estimate: estimate.to_f64().unwrap_or(f64::NAN), tolerance: options.tolerance })
}

/// The same dynamics as the second-order equation
/// `C̈ + (δ + i(ω_m−ω_A)) Ċ + (g/2)Γδ C = 0`, `C(0) = 0`, `Ċ(0) = S₀`,
/// integrated with classical RK4 using `steps_per_unit` steps per `1/max(Ω, δ)`.
pub fn integrate_ode<T: Real>(
    mode: &CollectiveMode<T>,
    rp: &ResonanceParams<T>,
    cfg: &DynamicsConfig<T>,
    steps_per_unit: usize,
) -> Result<Vec<Complex<T>>, DynamicsError> {
    cfg.validate()?;
    let (kappa, a) = kernel_params(mode, rp, cfg.detuning);
    let s0 = source_amplitude(mode, rp, cfg.delta_t);
    let scale = rp.rabi.max(rp.delta_omega_m).max(cfg.detuning.abs());
    let h_max = T::one() / (scale * T::of_usize(steps_per_unit.max(1)));
    let rhs = |c: Complex<T>, v: Complex<T>| (v, -(a * v) - c * kappa);
    let mut state = (Complex::new(T::zero(), T::zero()), Complex::new(s0, T::zero()));
    let mut t = T::zero();
    let mut out = Vec::with_capacity(cfg.t_grid.len());
    let half = T::lit(0.5);
    for &target in &cfg.t_grid {
        let span = target - t;
        let n = (span / h_max).ceil().to_usize().unwrap_or(0);
        if n > 0 {
            let h = span / T::of_usize(n);
            for _ in 0..n {
                let (c, v) = state;
                let k1 = rhs(c, v);
                let k2 = rhs(c + k1.0 * (h * half), v + k1.1 * (h * half));
                let k3 = rhs(c + k2.0 * (h * half), v + k2.1 * (h * half));
                let k4 = rhs(c + k3.0 * h, v + k3.1 * h);
                let w = h / T::lit(6.0);
                state = (
                    c + (k1.0 + k2.0 * T::lit(2.0) + k3.0 * T::lit(2.0) + k4.0) * w,
                    v + (k1.1 + k2.1 * T::lit(2.0) + k3.1 * T::lit(2.0) + k4.1) * w,
                );
            }
        }
        t = target;
        out.push(state.0);
    }
    Ok(out)
}
