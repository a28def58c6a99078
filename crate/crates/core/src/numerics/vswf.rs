use super::{
    c, cr, i_pow, ln_sph_h1_seq, ln_sph_j_seq, vsh, CVec3, NumericsError, Real, SphericalHarmonics,
    Vec3,
};
use num_complex::Complex;

/// `TE` multipoles are the `M` family, `TM` the `N` family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaveKind {
    /// `z_n = j_n`, finite at the origin.
    Regular,
    /// `z_n = h_n^(1)`, radiating.
    Outgoing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MultipoleIndex {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
}

impl MultipoleIndex {
    pub fn new(n: usize, m: i64, pol: Polarization) -> Option<Self> {
        if n >= 1 && m.unsigned_abs() as usize <= n {
            Some(Self { n, m, pol })
        } else {
            None
        }
    }
}

/// Truncated multipole basis: all `(pol, n, m)` with `1 ≤ n ≤ l_max`.
///
/// Layout is polarization-major, `TE` block first, and inside a block
/// `(n, m)` sits at `n(n+1) + m − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    pub l_max: usize,
}

impl Basis {
    pub fn new(l_max: usize) -> Self {
        Self { l_max }
    }

    /// Entries per polarization, `l_max(l_max + 2)`.
    #[inline]
    pub fn block(&self) -> usize {
        self.l_max * (self.l_max + 2)
    }

    #[inline]
    pub fn size(&self) -> usize {
        2 * self.block()
    }

    #[inline]
    pub fn nm(n: usize, m: i64) -> usize {
        ((n * (n + 1)) as i64 + m - 1) as usize
    }

    #[inline]
    pub fn index(&self, idx: MultipoleIndex) -> usize {
        let base = match idx.pol {
            Polarization::TE => 0,
            Polarization::TM => self.block(),
        };
        base + ((idx.n * (idx.n + 1)) as i64 + idx.m - 1) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = MultipoleIndex> + '_ {
        [Polarization::TE, Polarization::TM].into_iter().flat_map(move |pol| {
            (1..=self.l_max).flat_map(move |n| {
                (-(n as i64)..=n as i64).map(move |m| MultipoleIndex { n, m, pol })
            })
        })
    }
}

fn c1<T: Real>(n: usize) -> T {
    (T::of_usize(n + 1) / T::of_usize(2 * n + 1)).sqrt()
}

fn c2<T: Real>(n: usize) -> T {
    (T::of_usize(n) / T::of_usize(2 * n + 1)).sqrt()
}

fn radial_logs<T: Real>(kind: WaveKind, n_max: usize, z: Complex<T>) -> Result<Vec<Complex<T>>, NumericsError> {
    match kind {
        WaveKind::Regular => ln_sph_j_seq(n_max, z),
        WaveKind::Outgoing => {
            if z.norm() == T::zero() {
                Err(NumericsError::Domain("outgoing wave function evaluated at its origin".into()))
            } else {
                ln_sph_h1_seq(n_max, z)
            }
        }
    }
}

#[inline]
fn weighted_exp<T: Real>(ln: Complex<T>, w: T) -> Result<Complex<T>, NumericsError> {
    if ln.re == T::neg_infinity() {
        return Ok(cr(T::zero()));
    }
    let e = ln + w;
    if e.re > T::max_value().ln() {
        return Err(NumericsError::Range(format!("wave function overflows (ln = {})", e.re)));
    }
    Ok(e.exp())
}

/// All basis functions at `r`, each order `n` multiplied by `exp(ln_weight[n])`
/// (no weighting when `None`). The weighting is applied before
/// exponentiation, so large radial factors cancel against small weights
/// without overflow.
pub fn vswf_field<T: Real>(
    kind: WaveKind,
    k: Complex<T>,
    r: &Vec3<T>,
    l_max: usize,
    ln_weight: Option<&[T]>,
) -> Result<Vec<CVec3<T>>, NumericsError> {
    let basis = Basis::new(l_max);
    let (rad, theta, phi) = r.to_spherical();
    let zl = radial_logs(kind, l_max + 1, k * rad)?;
    let harm = SphericalHarmonics::new(l_max + 1, theta, phi);
    let mut out = vec![CVec3::zero(); basis.size()];
    let i = c(T::zero(), T::one());
    for n in 1..=l_max {
        let w = ln_weight.map_or(T::zero(), |v| v[n]);
        let zn = weighted_exp(zl[n], w)?;
        let zm = weighted_exp(zl[n - 1], w)?;
        let zp = weighted_exp(zl[n + 1], w)?;
        let ni = n as i64;
        for m in -ni..=ni {
            let te = vsh(&harm, ni, ni, m).scale(zn);
            let lo = vsh(&harm, ni - 1, ni, m).scale(zm * c1::<T>(n));
            let hi = vsh(&harm, ni + 1, ni, m).scale(zp * c2::<T>(n));
            let tm = (lo - hi).scale(i);
            out[Basis::nm(n, m)] = te;
            out[basis.block() + Basis::nm(n, m)] = tm;
        }
    }
    Ok(out)
}

/// Single basis function value.
pub fn vswf_eval<T: Real>(
    idx: MultipoleIndex,
    kind: WaveKind,
    k: Complex<T>,
    r: &Vec3<T>,
) -> Result<CVec3<T>, NumericsError> {
    let all = vswf_field(kind, k, r, idx.n, None)?;
    Ok(all[Basis::new(idx.n).index(idx)])
}

/// Regular expansion coefficients of `pol · exp(i k k̂·(r − origin_shift))`
/// about the origin, with `pol ⊥ k̂`. Each order is multiplied by
/// `exp(ln_weight[n])` when given.
pub fn plane_wave_coefficients<T: Real>(
    direction: &Vec3<T>,
    polarization: &CVec3<T>,
    l_max: usize,
    ln_weight: Option<&[T]>,
) -> Vec<Complex<T>> {
    let basis = Basis::new(l_max);
    let harm = SphericalHarmonics::from_direction(l_max + 1, direction);
    let four_pi = T::lit(4.0) * T::PI();
    let mut out = vec![cr(T::zero()); basis.size()];
    for n in 1..=l_max {
        let w = ln_weight.map_or(T::one(), |v| v[n].exp());
        let pre = i_pow::<T>(n as i64) * four_pi * w;
        let ni = n as i64;
        for m in -ni..=ni {
            let am = vsh(&harm, ni, ni, m).conj().dot(polarization);
            let lo = vsh(&harm, ni - 1, ni, m).conj().dot(polarization) * c1::<T>(n);
            let hi = vsh(&harm, ni + 1, ni, m).conj().dot(polarization) * c2::<T>(n);
            out[Basis::nm(n, m)] = pre * am;
            out[basis.block() + Basis::nm(n, m)] = -pre * (lo + hi);
        }
    }
    out
}

/// Regular expansion coefficients, about the origin, of the field `G_free(r, r_src) · p`
/// radiated by a point dipole at `r_src` (valid for `|r| < |r_src|`).
/// Units follow the Green tensor (1/m per unit `p`).
pub fn dipole_source_coefficients<T: Real>(
    k: Complex<T>,
    r_src: &Vec3<T>,
    p: &CVec3<T>,
    l_max: usize,
    ln_weight: Option<&[T]>,
) -> Result<Vec<Complex<T>>, NumericsError> {
    let basis = Basis::new(l_max);
    let (rad, theta, phi) = r_src.to_spherical();
    let hl = radial_logs(WaveKind::Outgoing, l_max + 1, k * rad)?;
    let harm = SphericalHarmonics::new(l_max + 1, theta, phi);
    let i = c(T::zero(), T::one());
    let ik = i * k;
    let mut out = vec![cr(T::zero()); basis.size()];
    for n in 1..=l_max {
        let w = ln_weight.map_or(T::zero(), |v| v[n]);
        let hn = weighted_exp(hl[n], w)?;
        let hm = weighted_exp(hl[n - 1], w)?;
        let hp = weighted_exp(hl[n + 1], w)?;
        let ni = n as i64;
        for m in -ni..=ni {
            let am = vsh(&harm, ni, ni, m).conj().dot(p) * hn;
            let lo = vsh(&harm, ni - 1, ni, m).conj().dot(p) * hm * c1::<T>(n);
            let hi = vsh(&harm, ni + 1, ni, m).conj().dot(p) * hp * c2::<T>(n);
            out[Basis::nm(n, m)] = ik * am;
            out[basis.block() + Basis::nm(n, m)] = ik * (-i) * (lo - hi);
        }
    }
    Ok(out)
}

/// Sum `Σ coeff_j · W_j(r)` over the basis.
pub fn expansion_value<T: Real>(coeffs: &[Complex<T>], fields: &[CVec3<T>]) -> CVec3<T> {
    let mut acc = CVec3::zero();
    for (a, f) in coeffs.iter().zip(fields) {
        if a.re == T::zero() && a.im == T::zero() {
            continue;
        }
        acc += f.scale(*a);
    }
    acc
}
