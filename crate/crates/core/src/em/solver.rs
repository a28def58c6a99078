//! Multiple-scattering solve `(I − T A) b = T a` in rescaled unknowns.
//!
//! Per sphere `j` with `x_j = |k| R_j`, regular coefficients are stored as
//! `α = a · s_reg(n)` and outgoing ones as `β = b · s_out(n)` (see
//! [`ln_regular_scale`], [`ln_outgoing_scale`]). Both are of the order of the
//! field on the sphere surface, which keeps high orders representable when
//! `x_j ≪ 1`. The scaled Mie response and the scaled translation blocks are
//! then O(1) as well.
//!
//! Collinear clusters are solved in a frame whose `z` axis is the cluster
//! axis. There the coupling is block diagonal in `m`, and only the `m` blocks
//! present in the source are factored.

use super::{
    ln_outgoing_scale, ln_regular_scale, mie_series, wavenumber, EmError, MieSeries, SphereCluster,
};
use crate::numerics::{
    axial_translation, cr, dipole_source_coefficients, expansion_value, gmres, plane_wave_coefficients,
    shared_axial_three_j, vswf_field, AxialTranslation, Basis, CMatrix, CVec3, LuFactors, NumericsError,
    Real, Rotation, TranslationKind, Vec3, WaveKind,
};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStrategy {
    /// Uncoupled for one sphere, axial for collinear clusters, dense LU for
    /// small systems, GMRES otherwise.
    #[default]
    Auto,
    Dense,
    Axial,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub strategy: SolverStrategy,
    pub gmres_tolerance: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// LU factorizations with a larger 1-norm condition estimate are rejected.
    pub condition_limit: f64,
    /// Azimuthal blocks whose source is below this fraction of the largest
    /// coefficient are skipped by the axial solver.
    pub m_threshold: f64,
    /// Largest unknown count handled by dense LU under `Auto`.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            strategy: SolverStrategy::Auto,
            gmres_tolerance: 1e-10,
            gmres_restart: 80,
            gmres_max_iter: 4000,
            condition_limit: 1e13,
            m_threshold: 1e-12,
            dense_limit: 2400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Uncoupled,
    Axial,
    Dense,
    Iterative,
}

/// Frequency-independent part of the problem: frame, centres and the
/// rotations used by the coupled solvers.
#[derive(Debug)]
pub struct ClusterGeometry<T> {
    l_max: usize,
    /// Columns are the working-frame axes expressed in the lab frame.
    frame: [[T; 3]; 3],
    origin: Vec3<T>,
    /// Centres in the working frame.
    centers: Vec<Vec3<T>>,
    radii: Vec<T>,
    layout: Layout,
    /// For `a < b`: rotation taking `z` to `c_b − c_a`. Kept in a fixed order
    /// so repeated solves are bitwise reproducible.
    rotations: Vec<((usize, usize), Rotation<T>)>,
    options: SolverOptions,
}

fn rotation_matrix<T: Real>(u: &Vec3<T>) -> [[T; 3]; 3] {
    let (_, th, ph) = u.to_spherical();
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    // R_z(φ) R_y(θ)
    [[cp * ct, -sp, cp * st], [sp * ct, cp, sp * st], [-st, T::zero(), ct]]
}

impl<T: Real> ClusterGeometry<T> {
    pub fn new(cluster: &SphereCluster, options: SolverOptions) -> Result<Self, EmError> {
        cluster.validate()?;
        let l_max = cluster.l_max;
        let ns = cluster.spheres.len();
        let lab: Vec<Vec3<T>> = cluster.spheres.iter().map(|s| s.center.cast()).collect();
        let radii = cluster.spheres.iter().map(|s| T::lit(s.radius)).collect();
        let axis = cluster.collinear_axis();
        let unknowns = ns * Basis::new(l_max).size();
        let layout = match options.strategy {
            _ if ns <= 1 => Layout::Uncoupled,
            SolverStrategy::Auto if axis.is_some() => Layout::Axial,
            SolverStrategy::Auto if unknowns <= options.dense_limit => Layout::Dense,
            SolverStrategy::Auto => Layout::Iterative,
            SolverStrategy::Axial if axis.is_some() => Layout::Axial,
            SolverStrategy::Axial => {
                return Err(EmError::InvalidCluster("axial solver needs collinear sphere centres".into()))
            }
            SolverStrategy::Dense => Layout::Dense,
            SolverStrategy::Iterative => Layout::Iterative,
        };
        let identity = [[T::one(), T::zero(), T::zero()], [T::zero(), T::one(), T::zero()], [T::zero(), T::zero(), T::one()]];
        let (frame, origin) = match (layout, axis) {
            (Layout::Axial, Some(u)) => (rotation_matrix(&u.cast()), lab[0]),
            _ => (identity, Vec3::zero()),
        };
        let mut geom = Self {
            l_max,
            frame,
            origin,
            centers: Vec::new(),
            radii,
            layout,
            rotations: Vec::new(),
            options,
        };
        geom.centers = lab.iter().map(|c| geom.to_work(&(*c - origin))).collect();
        if matches!(layout, Layout::Dense | Layout::Iterative) {
            for a in 0..ns {
                for b in (a + 1)..ns {
                    let d = geom.centers[b] - geom.centers[a];
                    geom.rotations.push(((a, b), Rotation::aligning(&d, l_max)));
                }
            }
        }
        Ok(geom)
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn sphere_count(&self) -> usize {
        self.centers.len()
    }

    /// Whether the `m`-block axial solver is in use.
    pub fn is_axial(&self) -> bool {
        self.layout == Layout::Axial
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    fn to_work(&self, v: &Vec3<T>) -> Vec3<T> {
        let q = &self.frame;
        Vec3::new(
            q[0][0] * v.x + q[1][0] * v.y + q[2][0] * v.z,
            q[0][1] * v.x + q[1][1] * v.y + q[2][1] * v.z,
            q[0][2] * v.x + q[1][2] * v.y + q[2][2] * v.z,
        )
    }

    fn point_to_work(&self, r: &Vec3<T>) -> Vec3<T> {
        self.to_work(&(*r - self.origin))
    }

    fn cvec_to_work(&self, v: &CVec3<T>) -> CVec3<T> {
        let q = &self.frame;
        let mut out = CVec3::zero();
        for i in 0..3 {
            out[i] = v[0] * q[0][i] + v[1] * q[1][i] + v[2] * q[2][i];
        }
        out
    }

    fn cvec_to_lab(&self, v: &CVec3<T>) -> CVec3<T> {
        let q = &self.frame;
        let mut out = CVec3::zero();
        for i in 0..3 {
            out[i] = v[0] * q[i][0] + v[1] * q[i][1] + v[2] * q[i][2];
        }
        out
    }

    /// Lab-frame coefficients to working-frame coefficients.
    fn coefficients_to_work(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        if self.layout == Layout::Axial {
            let u = Vec3::new(self.frame[0][2], self.frame[1][2], self.frame[2][2]);
            Rotation::aligning(&u, self.l_max).to_frame(c)
        } else {
            c.to_vec()
        }
    }

    fn coefficients_to_lab(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        if self.layout == Layout::Axial {
            let u = Vec3::new(self.frame[0][2], self.frame[1][2], self.frame[2][2]);
            Rotation::aligning(&u, self.l_max).from_frame(c)
        } else {
            c.to_vec()
        }
    }
}

/// Outcome of one solve, in scaled working-frame unknowns.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    /// Scaled outgoing coefficients per sphere.
    pub beta: Vec<Vec<Complex<T>>>,
    /// `‖(I − T̃Ã)β − T̃α‖ / ‖T̃α‖`.
    pub residual: T,
    /// Largest condition estimate among the factorizations used (direct solvers).
    pub condition: Option<T>,
    pub iterations: usize,
}

/// One cluster at one frequency.
pub struct ClusterSystem<T> {
    geom: Arc<ClusterGeometry<T>>,
    omega: T,
    k: Complex<T>,
    mie: Vec<MieSeries<T>>,
    ln_reg: Vec<Vec<T>>,
    neg_ln_out: Vec<Vec<T>>,
    /// Keyed by `(distance bits, target radius bits, source radius bits, sign)`.
    axial: Mutex<HashMap<(u64, u64, u64, i64), Arc<AxialTranslation<T>>>>,
    blocks: Mutex<HashMap<i64, Arc<(LuFactors<T>, T)>>>,
    dense: OnceLock<Result<Arc<(LuFactors<T>, T)>, NumericsError>>,
}

impl<T: Real> ClusterSystem<T> {
    pub fn new(geom: Arc<ClusterGeometry<T>>, cluster: &SphereCluster, omega: T) -> Result<Self, EmError> {
        let eps_host = cluster.host.permittivity(omega)?;
        let k = wavenumber(omega, eps_host);
        let l = geom.l_max;
        let mut mie = Vec::with_capacity(cluster.spheres.len());
        let mut ln_reg = Vec::new();
        let mut neg_ln_out = Vec::new();
        for (s, &radius) in cluster.spheres.iter().zip(&geom.radii) {
            let eps = s.material.permittivity(omega)?;
            let series = mie_series(radius, eps, eps_host, omega, l)?;
            let x = series.x_scale;
            ln_reg.push((0..=l).map(|n| if n == 0 { T::zero() } else { ln_regular_scale(n, x) }).collect());
            neg_ln_out.push((0..=l).map(|n| if n == 0 { T::zero() } else { -ln_outgoing_scale(n, x) }).collect());
            mie.push(series);
        }
        Ok(Self {
            geom,
            omega,
            k,
            mie,
            ln_reg,
            neg_ln_out,
            axial: Mutex::new(HashMap::new()),
            blocks: Mutex::new(HashMap::new()),
            dense: OnceLock::new(),
        })
    }

    /// Convenience constructor that builds its own geometry.
    pub fn for_cluster(cluster: &SphereCluster, omega: T, options: SolverOptions) -> Result<Self, EmError> {
        Self::new(Arc::new(ClusterGeometry::new(cluster, options)?), cluster, omega)
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn wavenumber(&self) -> Complex<T> {
        self.k
    }

    pub fn geometry(&self) -> &ClusterGeometry<T> {
        &self.geom
    }

    pub fn mie(&self, sphere: usize) -> &MieSeries<T> {
        &self.mie[sphere]
    }

    fn basis(&self) -> Basis {
        Basis::new(self.geom.l_max)
    }

    fn t_scaled(&self, j: usize, tm: bool, n: usize) -> Complex<T> {
        if tm {
            self.mie[j].t_tm_scaled[n]
        } else {
            self.mie[j].t_te_scaled[n]
        }
    }

    /// Apply the scaled Mie response to scaled regular coefficients.
    fn apply_t(&self, j: usize, alpha: &[Complex<T>]) -> Vec<Complex<T>> {
        let basis = self.basis();
        let block = basis.block();
        let mut out = vec![cr(T::zero()); basis.size()];
        for idx in basis.iter() {
            let i = basis.index(idx);
            let tm = i >= block;
            out[i] = self.t_scaled(j, tm, idx.n) * alpha[i];
        }
        out
    }

    /// Scaled regular coefficients of `G_free(·, r_src) · p` about every sphere.
    pub fn dipole_source(&self, r_src: &Vec3<T>, p: &CVec3<T>) -> Result<Vec<Vec<Complex<T>>>, EmError> {
        let rw = self.geom.point_to_work(r_src);
        let pw = self.geom.cvec_to_work(p);
        self.geom
            .centers
            .iter()
            .enumerate()
            .map(|(j, c)| Ok(dipole_source_coefficients(self.k, &(rw - *c), &pw, self.geom.l_max, Some(&self.ln_reg[j]))?))
            .collect()
    }

    /// Scaled regular coefficients of a unit-amplitude plane wave
    /// `pol · exp(i k dir·r)` (lab frame) about every sphere.
    pub fn plane_wave_source(&self, direction: &Vec3<T>, polarization: &CVec3<T>) -> Vec<Vec<Complex<T>>> {
        let dw = self.geom.to_work(direction);
        let pw = self.geom.cvec_to_work(polarization);
        let i = Complex::new(T::zero(), T::one());
        let origin_phase = (i * self.k * direction.dot(&self.geom.origin)).exp();
        self.geom
            .centers
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let phase = origin_phase * (i * self.k * dw.dot(c)).exp();
                plane_wave_coefficients(&dw, &pw, self.geom.l_max, Some(&self.ln_reg[j]))
                    .into_iter()
                    .map(|v| v * phase)
                    .collect()
            })
            .collect()
    }

    /// Scaled lab-frame regular coefficients to working-frame ones.
    pub fn scale_source(&self, lab: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
        let basis = self.basis();
        lab.iter()
            .enumerate()
            .map(|(j, a)| {
                let scaled: Vec<Complex<T>> = basis.iter().map(|idx| a[basis.index(idx)] * self.ln_reg[j][idx.n].exp()).collect();
                self.geom.coefficients_to_work(&scaled)
            })
            .collect()
    }

    /// Working-frame scaled outgoing coefficients to unscaled lab ones.
    pub fn unscale_solution(&self, beta: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
        let basis = self.basis();
        beta.iter()
            .enumerate()
            .map(|(j, b)| {
                let lab = self.geom.coefficients_to_lab(b);
                basis.iter().map(|idx| lab[basis.index(idx)] * self.neg_ln_out[j][idx.n].exp()).collect()
            })
            .collect()
    }

    /// Scattered field at lab point `r` from scaled outgoing coefficients.
    pub fn scattered_field(&self, beta: &[Vec<Complex<T>>], r: &Vec3<T>) -> Result<CVec3<T>, EmError> {
        let rw = self.geom.point_to_work(r);
        let mut e = CVec3::zero();
        for (j, c) in self.geom.centers.iter().enumerate() {
            let fields = vswf_field(WaveKind::Outgoing, self.k, &(rw - *c), self.geom.l_max, Some(&self.neg_ln_out[j]))?;
            e += expansion_value(&beta[j], &fields);
        }
        Ok(self.geom.cvec_to_lab(&e))
    }

    pub fn solve(&self, alpha: &[Vec<Complex<T>>]) -> Result<Solution<T>, EmError> {
        let ns = self.geom.sphere_count();
        assert_eq!(alpha.len(), ns, "one source expansion per sphere");
        match self.geom.layout {
            Layout::Uncoupled => Ok(Solution {
                beta: (0..ns).map(|j| self.apply_t(j, &alpha[j])).collect(),
                residual: T::zero(),
                condition: Some(T::one()),
                iterations: 0,
            }),
            Layout::Axial => self.solve_axial(alpha),
            Layout::Dense => self.solve_dense(alpha),
            Layout::Iterative => self.solve_iterative(alpha),
        }
    }

    fn rhs(&self, alpha: &[Vec<Complex<T>>]) -> Vec<Complex<T>> {
        alpha.iter().enumerate().flat_map(|(j, a)| self.apply_t(j, a)).collect()
    }

    fn axial_pair(&self, t: usize, s: usize, m_max: usize) -> Result<Arc<AxialTranslation<T>>, EmError> {
        let g = &self.geom;
        let dz = g.centers[t].z - g.centers[s].z;
        let dist = dz.abs();
        let sign = if dz >= T::zero() { 1 } else { -1 };
        let bits = |v: T| v.to_f64().unwrap_or(f64::NAN).to_bits();
        let key = (bits(dist), bits(g.radii[t]), bits(g.radii[s]), sign);
        let mut cache = self.axial.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = cache.get(&key) {
            if hit.m_max >= m_max {
                return Ok(hit.clone());
            }
        }
        let rev_key = (key.0, key.1, key.2, -sign);
        let op = match cache.get(&rev_key) {
            Some(rev) if rev.m_max >= m_max => Arc::new(rev.reversed()),
            _ => {
                let l = g.l_max;
                let three_j = shared_axial_three_j::<T>(l, (m_max + 1).min(l));
                let neg_out = &self.neg_ln_out[s];
                Arc::new(axial_translation(
                    TranslationKind::OutgoingToRegular,
                    self.k,
                    dist,
                    sign,
                    l,
                    m_max,
                    &three_j,
                    Some(&self.ln_reg[t]),
                    Some(neg_out),
                )?)
            }
        };
        cache.insert(key, op.clone());
        Ok(op)
    }

    fn block_factors(&self, m: i64, m_max: usize) -> Result<Arc<(LuFactors<T>, T)>, EmError> {
        if let Some(hit) = self.blocks.lock().unwrap_or_else(|e| e.into_inner()).get(&m) {
            return Ok(hit.clone());
        }
        let g = &self.geom;
        let ns = g.sphere_count();
        let l = g.l_max as i64;
        let lo = m.abs().max(1);
        let nd = (l - lo + 1) as usize;
        let per = 2 * nd;
        let mut mat = CMatrix::identity(ns * per);
        for t in 0..ns {
            for s in 0..ns {
                if s == t {
                    continue;
                }
                let op = self.axial_pair(t, s, m_max)?;
                let (a, b) = op.block(m);
                for i in 0..nd {
                    let n = lo as usize + i;
                    let t_te = self.t_scaled(t, false, n);
                    let t_tm = self.t_scaled(t, true, n);
                    for jj in 0..nd {
                        let (av, bv) = (a[i * nd + jj], b[i * nd + jj]);
                        let (r_te, r_tm) = (t * per + i, t * per + nd + i);
                        let (c_te, c_tm) = (s * per + jj, s * per + nd + jj);
                        mat.add_at(r_te, c_te, -t_te * av);
                        mat.add_at(r_te, c_tm, -t_te * bv);
                        mat.add_at(r_tm, c_te, -t_tm * bv);
                        mat.add_at(r_tm, c_tm, -t_tm * av);
                    }
                }
            }
        }
        let lu = mat.lu()?;
        let cond = lu.check_condition(T::lit(g.options.condition_limit))?;
        let entry = Arc::new((lu, cond));
        self.blocks.lock().unwrap_or_else(|e| e.into_inner()).insert(m, entry.clone());
        Ok(entry)
    }

    fn solve_axial(&self, alpha: &[Vec<Complex<T>>]) -> Result<Solution<T>, EmError> {
        let g = &self.geom;
        let ns = g.sphere_count();
        let l = g.l_max as i64;
        let basis = self.basis();
        let block = basis.block();
        let rhs_full: Vec<Vec<Complex<T>>> = (0..ns).map(|j| self.apply_t(j, &alpha[j])).collect();
        // which azimuthal blocks carry source
        let mut strength = vec![T::zero(); (2 * l + 1) as usize];
        for r in &rhs_full {
            for idx in basis.iter() {
                let v = r[basis.index(idx)].norm();
                let slot = &mut strength[(idx.m + l) as usize];
                *slot = slot.max(v);
            }
        }
        let peak = strength.iter().fold(T::zero(), |a, &b| a.max(b));
        let cut = peak * T::lit(g.options.m_threshold);
        let ms: Vec<i64> = (-l..=l).filter(|m| peak > T::zero() && strength[(m + l) as usize] > cut).collect();
        let m_max = ms.iter().map(|m| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut beta = vec![vec![cr(T::zero()); basis.size()]; ns];
        let (mut res2, mut rhs2) = (T::zero(), T::zero());
        let mut cond = T::one();
        for &m in &ms {
            let lo = m.abs().max(1);
            let nd = (l - lo + 1) as usize;
            let per = 2 * nd;
            let mut rhs = vec![cr(T::zero()); ns * per];
            for j in 0..ns {
                for i in 0..nd {
                    let at = Basis::nm(lo as usize + i, m);
                    rhs[j * per + i] = rhs_full[j][at];
                    rhs[j * per + nd + i] = rhs_full[j][block + at];
                }
            }
            let f = self.block_factors(m, m_max)?;
            let x = f.0.solve(&rhs);
            cond = cond.max(f.1);
            // residual against the operator, applied without the factorization
            let ax = self.block_apply(m, m_max, &x)?;
            for (a, b) in ax.iter().zip(&rhs) {
                res2 = res2 + (*a - *b).norm_sqr();
                rhs2 = rhs2 + b.norm_sqr();
            }
            for j in 0..ns {
                for i in 0..nd {
                    let at = Basis::nm(lo as usize + i, m);
                    beta[j][at] = x[j * per + i];
                    beta[j][block + at] = x[j * per + nd + i];
                }
            }
        }
        let residual = if rhs2 > T::zero() { (res2 / rhs2).sqrt() } else { T::zero() };
        Ok(Solution { beta, residual, condition: Some(cond), iterations: 0 })
    }

    fn block_apply(&self, m: i64, m_max: usize, x: &[Complex<T>]) -> Result<Vec<Complex<T>>, EmError> {
        let g = &self.geom;
        let ns = g.sphere_count();
        let l = g.l_max as i64;
        let lo = m.abs().max(1);
        let nd = (l - lo + 1) as usize;
        let per = 2 * nd;
        let mut out = x.to_vec();
        for t in 0..ns {
            for s in 0..ns {
                if s == t {
                    continue;
                }
                let op = self.axial_pair(t, s, m_max)?;
                let (a, b) = op.block(m);
                for i in 0..nd {
                    let n = lo as usize + i;
                    let (mut te, mut tm) = (cr(T::zero()), cr(T::zero()));
                    for jj in 0..nd {
                        let (xm, xn) = (x[s * per + jj], x[s * per + nd + jj]);
                        te = te + a[i * nd + jj] * xm + b[i * nd + jj] * xn;
                        tm = tm + b[i * nd + jj] * xm + a[i * nd + jj] * xn;
                    }
                    out[t * per + i] = out[t * per + i] - self.t_scaled(t, false, n) * te;
                    out[t * per + nd + i] = out[t * per + nd + i] - self.t_scaled(t, true, n) * tm;
                }
            }
        }
        Ok(out)
    }

    /// `Σ_{s≠t} Ã_{ts} β_s` for every target `t`, through rotated translations.
    fn couple(&self, beta: &[Complex<T>]) -> Result<Vec<Complex<T>>, EmError> {
        let g = &self.geom;
        let ns = g.sphere_count();
        let size = self.basis().size();
        let mut out = vec![cr(T::zero()); ns * size];
        for ((a, b), rot) in &g.rotations {
            let (a, b) = (*a, *b);
            let dist = (g.centers[b] - g.centers[a]).norm();
            for (t, s, sign) in [(b, a, 1i64), (a, b, -1i64)] {
                let op = self.rotated_axial(t, s, dist, sign)?;
                let local = rot.to_frame(&beta[s * size..(s + 1) * size]);
                let mut moved = vec![cr(T::zero()); size];
                op.apply_add(&local, &mut moved);
                let back = rot.from_frame(&moved);
                for (o, v) in out[t * size..(t + 1) * size].iter_mut().zip(back) {
                    *o = *o + v;
                }
            }
        }
        Ok(out)
    }

    fn rotated_axial(&self, t: usize, s: usize, dist: T, sign: i64) -> Result<Arc<AxialTranslation<T>>, EmError> {
        let g = &self.geom;
        let bits = |v: T| v.to_f64().unwrap_or(f64::NAN).to_bits();
        let key = (bits(dist), bits(g.radii[t]), bits(g.radii[s]), sign);
        let mut cache = self.axial.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let rev_key = (key.0, key.1, key.2, -sign);
        let op = match cache.get(&rev_key) {
            Some(rev) => Arc::new(rev.reversed()),
            None => {
                let l = g.l_max;
                let three_j = shared_axial_three_j::<T>(l, l);
                Arc::new(axial_translation(
                    TranslationKind::OutgoingToRegular,
                    self.k,
                    dist,
                    sign,
                    l,
                    l,
                    &three_j,
                    Some(&self.ln_reg[t]),
                    Some(&self.neg_ln_out[s]),
                )?)
            }
        };
        cache.insert(key, op.clone());
        Ok(op)
    }

    fn apply_system(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>, EmError> {
        let size = self.basis().size();
        let coupled = self.couple(x)?;
        let mut out = x.to_vec();
        for j in 0..self.geom.sphere_count() {
            let t = self.apply_t(j, &coupled[j * size..(j + 1) * size]);
            for (o, v) in out[j * size..(j + 1) * size].iter_mut().zip(t) {
                *o = *o - v;
            }
        }
        Ok(out)
    }

    fn split(&self, x: Vec<Complex<T>>) -> Vec<Vec<Complex<T>>> {
        let size = self.basis().size();
        x.chunks(size).map(|c| c.to_vec()).collect()
    }

    fn residual_of(&self, x: &[Complex<T>], rhs: &[Complex<T>]) -> Result<T, EmError> {
        let ax = self.apply_system(x)?;
        let num = ax.iter().zip(rhs).fold(T::zero(), |a, (p, q)| a + (*p - *q).norm_sqr());
        let den = rhs.iter().fold(T::zero(), |a, q| a + q.norm_sqr());
        Ok(if den > T::zero() { (num / den).sqrt() } else { T::zero() })
    }

    fn solve_dense(&self, alpha: &[Vec<Complex<T>>]) -> Result<Solution<T>, EmError> {
        let f = self
            .dense
            .get_or_init(|| {
                let n = self.geom.sphere_count() * self.basis().size();
                let mut mat = CMatrix::zeros(n, n);
                let mut e = vec![cr(T::zero()); n];
                for col in 0..n {
                    e[col] = cr(T::one());
                    let column = self.apply_system(&e).map_err(|err| match err {
                        EmError::Numerics(ne) => ne,
                        other => NumericsError::Domain(other.to_string()),
                    })?;
                    e[col] = cr(T::zero());
                    for (row, v) in column.into_iter().enumerate() {
                        mat.set(row, col, v);
                    }
                }
                let lu = mat.lu()?;
                let cond = lu.check_condition(T::lit(self.geom.options.condition_limit))?;
                Ok(Arc::new((lu, cond)))
            })
            .clone()?;
        let rhs = self.rhs(alpha);
        let x = f.0.solve(&rhs);
        let residual = self.residual_of(&x, &rhs)?;
        Ok(Solution { beta: self.split(x), residual, condition: Some(f.1), iterations: 0 })
    }

    fn solve_iterative(&self, alpha: &[Vec<Complex<T>>]) -> Result<Solution<T>, EmError> {
        let rhs = self.rhs(alpha);
        let o = &self.geom.options;
        let failure: Mutex<Option<EmError>> = Mutex::new(None);
        let apply = |v: &[Complex<T>]| match self.apply_system(v) {
            Ok(r) => r,
            Err(e) => {
                *failure.lock().unwrap_or_else(|p| p.into_inner()) = Some(e);
                vec![cr(T::zero()); v.len()]
            }
        };
        let out = gmres(apply, &rhs, Some(&rhs), o.gmres_restart, T::lit(o.gmres_tolerance), o.gmres_max_iter);
        if let Some(e) = failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
            return Err(e);
        }
        let out = out?;
        let residual = self.residual_of(&out.solution, &rhs)?;
        Ok(Solution { beta: self.split(out.solution), residual, condition: None, iterations: out.iterations })
    }
}

/// Solve for unscaled lab-frame outgoing coefficients `b` given unscaled
/// lab-frame regular source coefficients `a`, one expansion per sphere over
/// the cluster's basis. High orders may underflow in this representation;
/// the scaled interface of [`ClusterSystem`] does not.
pub fn solve_cluster<T: Real>(
    cluster: &SphereCluster,
    source: &[Vec<Complex<T>>],
    omega: T,
) -> Result<Vec<Vec<Complex<T>>>, EmError> {
    let sys = ClusterSystem::for_cluster(cluster, omega, SolverOptions::default())?;
    let alpha = sys.scale_source(source);
    let sol = sys.solve(&alpha)?;
    Ok(sys.unscale_solution(&sol.beta))
}
