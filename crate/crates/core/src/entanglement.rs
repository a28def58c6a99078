//! Collective qubit states, single-excitation density operators, pair
//! reductions, the purity-based genuine multipartite entanglement `E_G`
//! and the Wootters concurrence.
//!
//! Computational basis: qubit 0 is the least significant bit of the index
//! and the all-ground state `|L⟩` is index 0. The ket with only qubit `a`
//! excited is index `1 << a`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::{amplitude, classify_coupling, Coupling, CollectiveMode, DynamicsConfig, DynamicsError, ModeKind, ResonanceParams, STRONG_COUPLING_RATIO};
use crate::numerics::{hermitian_eigen, CMatrix, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntanglementError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("qubit index {index} out of range for {qubits} qubits")]
    Index { index: usize, qubits: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Orthonormal single-excitation states `|i⟩ = Σ_A x_A |A⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveBasis<T> {
    pub n: usize,
    pub states: Vec<Vec<T>>,
    pub labels: Vec<String>,
}

impl<T: Real> CollectiveBasis<T> {
    /// Unnormalized-then-normalized partner form of state `i ≥ 1`: `N−1` on
    /// qubit `i−1` and `−1` elsewhere. For `i = 1` this is the basis state
    /// itself; the later ones are degenerate partners with the same
    /// pair statistics but are not orthogonal to it for `N ≥ 3`.
    pub fn partner_form(&self, i: usize) -> Vec<T> {
        if self.n == 2 {
            return self.states[i.min(1)].clone();
        }
        let norm = T::of_usize(self.n * (self.n - 1)).sqrt();
        (0..self.n)
            .map(|a| if a + 1 == i { T::of_usize(self.n - 1) / norm } else { -T::one() / norm })
            .collect()
    }

    pub fn gram(&self) -> Vec<Vec<T>> {
        self.states
            .iter()
            .map(|u| self.states.iter().map(|v| u.iter().zip(v).fold(T::zero(), |s, (a, b)| s + *a * *b)).collect())
            .collect()
    }
}

/// Symmetric state first, then for `N = 2` the antisymmetric state, for
/// `N ≥ 3` the partner forms orthogonalized in order (the first of them is
/// already orthogonal to the symmetric state and is kept exactly).
pub fn collective_basis<T: Real>(n: usize) -> Result<CollectiveBasis<T>, EntanglementError> {
    if n < 2 {
        return Err(EntanglementError::Domain(format!("need at least two qubits, got {n}")));
    }
    let mut states = vec![vec![T::one() / T::of_usize(n).sqrt(); n]];
    let mut labels = vec!["symmetric".to_string()];
    if n == 2 {
        let s = T::one() / T::lit(2.0).sqrt();
        states.push(vec![s, -s]);
        labels.push("antisymmetric".to_string());
        return Ok(CollectiveBasis { n, states, labels });
    }
    let proto = CollectiveBasis { n, states: states.clone(), labels: Vec::new() };
    for i in 1..n {
        let mut v = proto.partner_form(i);
        for u in &states {
            let dot = u.iter().zip(&v).fold(T::zero(), |s, (a, b)| s + *a * *b);
            for (x, y) in v.iter_mut().zip(u) {
                *x = *x - dot * *y;
            }
        }
        let norm = v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt();
        v.iter_mut().for_each(|x| *x = *x / norm);
        labels.push(if i == 1 { "state 2".to_string() } else { format!("state {} (orthogonalized)", i + 1) });
        states.push(v);
    }
    Ok(CollectiveBasis { n, states, labels })
}

/// `N`-qubit density matrix in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitDensity<T> {
    pub n: usize,
    pub rho: CMatrix<T>,
}

impl<T: Real> QubitDensity<T> {
    pub fn new(n: usize, rho: CMatrix<T>) -> Result<Self, EntanglementError> {
        if rho.rows != 1 << n || rho.cols != 1 << n {
            return Err(EntanglementError::Domain(format!("{}x{} matrix for {n} qubits", rho.rows, rho.cols)));
        }
        check_hermitian(&rho)?;
        Ok(Self { n, rho })
    }

    /// Pure state from amplitudes.
    pub fn pure(n: usize, psi: &[Complex<T>]) -> Result<Self, EntanglementError> {
        let d = 1 << n;
        if psi.len() != d {
            return Err(EntanglementError::Domain(format!("state of length {} for {n} qubits", psi.len())));
        }
        Self::new(n, CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn trace(&self) -> T {
        (0..self.rho.rows).fold(T::zero(), |s, i| s + self.rho.get(i, i).re)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigen(&self.rho).0
    }

    /// Kronecker product, `self` on the low qubits.
    pub fn tensor(&self, high: &Self) -> Self {
        let (da, db) = (self.rho.rows, high.rho.rows);
        let rho = CMatrix::from_fn(da * db, da * db, |i, j| high.rho.get(i / da, j / da) * self.rho.get(i % da, j % da));
        Self { n: self.n + high.n, rho }
    }
}

fn check_hermitian<T: Real>(m: &CMatrix<T>) -> Result<(), EntanglementError> {
    let scale = m.data.iter().fold(T::zero(), |a, v| a.max(v.norm())).max(T::one());
    let tol = T::lit(1e-12) * scale;
    for i in 0..m.rows {
        for j in 0..=i {
            if (m.get(i, j) - m.get(j, i).conj()).norm() > tol {
                return Err(EntanglementError::Domain(format!("matrix is not Hermitian at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// `ρ = p |i⟩⟨i| + (1 − p) |L⟩⟨L|`.
pub fn density_operator<T: Real>(state: &[T], p: T) -> Result<QubitDensity<T>, EntanglementError> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(EntanglementError::Domain(format!("probability {p} outside [0, 1]")));
    }
    let n = state.len();
    if n == 0 || n > 16 {
        return Err(EntanglementError::Domain(format!("unsupported qubit count {n}")));
    }
    let d = 1usize << n;
    let mut rho = CMatrix::zeros(d, d);
    rho.set(0, 0, Complex::new(T::one() - p, T::zero()));
    for (a, xa) in state.iter().enumerate() {
        for (b, xb) in state.iter().enumerate() {
            rho.set(1 << a, 1 << b, Complex::new(p * *xa * *xb, T::zero()));
        }
    }
    Ok(QubitDensity { n, rho })
}

/// Partial trace onto qubits `(j, k)`; qubit `j` is the low bit of the
/// 4×4 result.
pub fn reduced_pair<T: Real>(rho: &QubitDensity<T>, j: usize, k: usize) -> Result<CMatrix<T>, EntanglementError> {
    for idx in [j, k] {
        if idx >= rho.n {
            return Err(EntanglementError::Index { index: idx, qubits: rho.n });
        }
    }
    if j == k {
        return Err(EntanglementError::Domain("pair indices must differ".into()));
    }
    let d = 1usize << rho.n;
    let mask = (1usize << j) | (1usize << k);
    let local = |i: usize| ((i >> j) & 1) | (((i >> k) & 1) << 1);
    let mut out = CMatrix::zeros(4, 4);
    for r in 0..d {
        for c in 0..d {
            if r & !mask == c & !mask {
                let v = rho.rho.get(r, c);
                if v != Complex::new(T::zero(), T::zero()) {
                    out.add_at(local(r), local(c), v);
                }
            }
        }
    }
    Ok(out)
}

/// `Tr ρ²` of a Hermitian matrix.
pub fn purity<T: Real>(m: &CMatrix<T>) -> T {
    m.data.iter().fold(T::zero(), |s, v| s + v.norm_sqr())
}

/// `E_G = 2/(N(N−1)) Σ_l (N−l) G(2,l)` with
/// `G(2,l) = 4/3 [1 − 1/(N−l) Σ_j Tr ρ_{j,j+l}²]`.
pub fn genuine_entanglement<T: Real>(rho: &QubitDensity<T>) -> Result<T, EntanglementError> {
    let n = rho.n;
    if n < 2 {
        return Err(EntanglementError::Domain("genuine entanglement needs at least two qubits".into()));
    }
    let mut total = T::zero();
    for l in 1..n {
        let mut sum = T::zero();
        for j in 0..n - l {
            sum = sum + purity(&reduced_pair(rho, j, j + l)?);
        }
        let g = T::lit(4.0) / T::lit(3.0) * (T::one() - sum / T::of_usize(n - l));
        total = total + T::of_usize(n - l) * g;
    }
    Ok(T::lit(2.0) * total / T::of_usize(n * (n - 1)))
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)` with `λ` the square
/// roots of the eigenvalues of `ρ ρ̃`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
/// Evaluated through the Hermitian form `√ρ ρ̃ √ρ`.
pub fn concurrence<T: Real>(rho: &CMatrix<T>) -> Result<T, EntanglementError> {
    if rho.rows != 4 || rho.cols != 4 {
        return Err(EntanglementError::Domain("concurrence needs a 4x4 matrix".into()));
    }
    check_hermitian(rho)?;
    // σ_y⊗σ_y maps |b⟩ to −(−1)^{popcount} |3−b⟩ up to an overall sign
    let sign = |i: usize| if (i.count_ones() & 1) == 1 { -T::one() } else { T::one() };
    let tilde = CMatrix::from_fn(4, 4, |i, j| rho.get(3 - i, 3 - j).conj() * (sign(i) * sign(j)));
    let (w, v) = hermitian_eigen(rho);
    let sqrt_rho = CMatrix::from_fn(4, 4, |i, j| {
        (0..4).fold(Complex::new(T::zero(), T::zero()), |s, m| s + v.get(i, m) * v.get(j, m).conj() * w[m].max(T::zero()).sqrt())
    });
    let mut r = sqrt_rho.mul(&tilde).mul(&sqrt_rho);
    // symmetrize against round-off before the Hermitian solver
    let herm = CMatrix::from_fn(4, 4, |i, j| (r.get(i, j) + r.get(j, i).conj()) * T::lit(0.5));
    r = herm;
    let mu = hermitian_eigen(&r).0;
    // eigenvalues below the round-off level of the largest one are zero;
    // their square roots would otherwise leak ~1e-8 into the result
    let floor = mu.iter().fold(T::zero(), |m, x| m.max(x.abs())) * T::epsilon() * T::lit(64.0);
    let mut lam: Vec<T> = mu.into_iter().map(|x| if x > floor { x.sqrt() } else { T::zero() }).collect();
    lam.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(T::zero()).min(T::one()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementTrace<T> {
    pub t: Vec<T>,
    pub p: Vec<T>,
    pub e_g: Vec<T>,
    /// Present for two qubits only.
    pub concurrence: Option<Vec<T>>,
    /// Coefficient vector of the evolved collective state.
    pub state: Vec<T>,
}

impl<T: Real> EntanglementTrace<T> {
    pub fn max_e_g(&self) -> T {
        self.e_g.iter().fold(T::zero(), |a, v| a.max(*v))
    }

    pub fn max_p(&self) -> T {
        self.p.iter().fold(T::zero(), |a, v| a.max(*v))
    }

    /// Time of the largest `E_G`.
    pub fn argmax_e_g(&self) -> T {
        let i = (0..self.e_g.len())
            .max_by(|&a, &b| self.e_g[a].partial_cmp(&self.e_g[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        self.t.get(i).copied().unwrap_or(T::zero())
    }
}

/// State evolved for a mode: the symmetric state for the superradiant
/// branch, the first antisymmetric-family state otherwise.
pub fn mode_state<T: Real>(mode: &CollectiveMode<T>) -> Result<Vec<T>, EntanglementError> {
    let basis = collective_basis::<T>(mode.emitters)?;
    Ok(match mode.kind {
        ModeKind::Superradiant => basis.states[0].clone(),
        ModeKind::Subradiant => basis.states[1].clone(),
    })
}

/// Entanglement along the closed-form amplitude of `mode`.
pub fn entanglement_trace<T: Real>(
    mode: &CollectiveMode<T>,
    rp: &ResonanceParams<T>,
    cfg: &DynamicsConfig<T>,
) -> Result<EntanglementTrace<T>, EntanglementError> {
    if classify_coupling(rp) == Coupling::Weak {
        return Err(DynamicsError::WeakCoupling {
            ratio: rp.coupling_ratio().to_f64().unwrap_or(f64::NAN),
            threshold: STRONG_COUPLING_RATIO,
        }
        .into());
    }
    let c = amplitude(mode, rp, cfg)?;
    let state = mode_state(mode)?;
    trace_from_amplitude(&state, &cfg.t_grid, &c)
}

/// `p = |C|²` clamped to `[0, 1]`, then `E_G` (and concurrence for two
/// qubits) at every sample.
pub fn trace_from_amplitude<T: Real>(state: &[T], t: &[T], c: &[Complex<T>]) -> Result<EntanglementTrace<T>, EntanglementError> {
    let mut p = Vec::with_capacity(c.len());
    let mut e_g = Vec::with_capacity(c.len());
    let mut conc = Vec::new();
    for a in c {
        let pi = a.norm_sqr().min(T::one());
        let rho = density_operator(state, pi)?;
        e_g.push(genuine_entanglement(&rho)?);
        if state.len() == 2 {
            conc.push(concurrence(&rho.rho)?);
        }
        p.push(pi);
    }
    Ok(EntanglementTrace {
        t: t.to_vec(),
        p,
        e_g,
        concurrence: (state.len() == 2).then_some(conc),
        state: state.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bases_match_listed_vectors_and_are_orthonormal() {
        let b2 = collective_basis::<f64>(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(b2.states, vec![vec![s, s], vec![s, -s]]);
        let b4 = collective_basis::<f64>(4).unwrap();
        let r = 12f64.sqrt();
        for (x, y) in b4.states[1].iter().zip([3.0 / r, -1.0 / r, -1.0 / r, -1.0 / r]) {
            assert!(close(*x, y, 1e-15));
        }
        let b3 = collective_basis::<f64>(3).unwrap();
        let r6 = 6f64.sqrt();
        for (x, y) in b3.states[1].iter().zip([2.0 / r6, -1.0 / r6, -1.0 / r6]) {
            assert!(close(*x, y, 1e-15));
        }
        for n in 2..=6 {
            let g = collective_basis::<f64>(n).unwrap().gram();
            for (i, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert!(close(*v, if i == j { 1.0 } else { 0.0 }, 1e-14), "n={n} ({i},{j}) {v}");
                }
            }
        }
        assert!(collective_basis::<f64>(1).is_err());
    }

    #[test]
    fn density_operator_edge_cases() {
        let s = collective_basis::<f64>(2).unwrap().states[0].clone();
        let r0 = density_operator(&s, 0.0).unwrap();
        assert_eq!(r0.rho.get(0, 0).re, 1.0);
        assert_eq!(r0.rho.data.iter().filter(|v| v.norm() > 0.0).count(), 1);
        let r1 = density_operator(&s, 1.0).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!(close(r1.rho.get(i, j).re, 0.5, 1e-15));
        }
        assert!(close(r1.trace(), 1.0, 1e-15));
        let r = density_operator(&collective_basis::<f64>(3).unwrap().states[2], 0.3).unwrap();
        assert!(close(r.trace(), 1.0, 1e-14));
        let rank = r.eigenvalues().iter().filter(|v| v.abs() > 1e-12).count();
        assert!(rank <= 2);
        assert!(density_operator(&s, 1.5).is_err());
        assert!(density_operator(&s, -0.1).is_err());
        assert!(density_operator(&s, f64::NAN).is_err());
    }

    fn single(a: f64, b: f64) -> QubitDensity<f64> {
        // diag(a, 1−a) plus coherence b
        let rho = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex::new(a, 0.0),
            (1, 1) => Complex::new(1.0 - a, 0.0),
            (0, 1) => Complex::new(b, 0.1),
            _ => Complex::new(b, -0.1),
        });
        QubitDensity::new(1, rho).unwrap()
    }

    #[test]
    fn product_state_reduction() {
        let (ra, rb, rc) = (single(0.3, 0.2), single(0.8, -0.1), single(0.5, 0.0));
        let full = ra.tensor(&rb).tensor(&rc);
        let red = reduced_pair(&full, 0, 1).unwrap();
        let expect = ra.tensor(&rb).rho;
        for (x, y) in red.data.iter().zip(&expect.data) {
            assert!((x - y).norm() < 1e-14);
        }
        assert!(reduced_pair(&full, 0, 3).is_err());
        assert!(reduced_pair(&full, 1, 1).is_err());
    }

    #[test]
    fn symmetric_trio_reduction() {
        let s = collective_basis::<f64>(3).unwrap().states[0].clone();
        let p = 0.6;
        let rho = density_operator(&s, p).unwrap();
        let red = reduced_pair(&rho, 0, 2).unwrap();
        // (2p/3)|Ψ⁺⟩⟨Ψ⁺| + (1 − 2p/3)|gg⟩⟨gg|
        let q = 2.0 * p / 3.0;
        for i in 0..4 {
            for j in 0..4 {
                let e = match (i, j) {
                    (0, 0) => 1.0 - q,
                    (1 | 2, 1 | 2) => q / 2.0,
                    _ => 0.0,
                };
                assert!(close(red.get(i, j).re, e, 1e-15) && red.get(i, j).im == 0.0);
            }
        }
    }

    #[test]
    fn analytic_anchors() {
        let s = collective_basis::<f64>(2).unwrap().states[0].clone();
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let rho = density_operator(&s, p).unwrap();
            assert!(close(genuine_entanglement(&rho).unwrap(), 8.0 / 3.0 * p * (1.0 - p), 1e-12));
            assert!(close(concurrence(&rho.rho).unwrap(), p, 1e-12), "p={p}");
        }
        let w = collective_basis::<f64>(3).unwrap().states[0].clone();
        assert!(close(genuine_entanglement(&density_operator(&w, 1.0).unwrap()).unwrap(), 16.0 / 27.0, 1e-12));
        let h = 0.5f64.sqrt();
        let mut ghz = vec![Complex::new(0.0, 0.0); 8];
        ghz[0] = Complex::new(h, 0.0);
        ghz[7] = Complex::new(h, 0.0);
        assert!(close(genuine_entanglement(&QubitDensity::pure(3, &ghz).unwrap()).unwrap(), 2.0 / 3.0, 1e-12));
        let mut prod = vec![Complex::new(0.0, 0.0); 16];
        prod[5] = Complex::new(1.0, 0.0);
        assert!(genuine_entanglement::<f64>(&QubitDensity::pure(4, &prod).unwrap()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn concurrence_anchors() {
        let h = 0.5f64.sqrt();
        let mut bell = vec![Complex::new(0.0, 0.0); 4];
        bell[0] = Complex::new(h, 0.0);
        bell[3] = Complex::new(0.0, h);
        assert!(close(concurrence(&QubitDensity::pure(2, &bell).unwrap().rho).unwrap(), 1.0, 1e-12));
        let gg = density_operator(&[h, h], 0.0).unwrap();
        assert_eq!(concurrence(&gg.rho).unwrap(), 0.0);
        let mut bad = CMatrix::<f64>::identity(4);
        bad.set(0, 1, Complex::new(0.2, 0.0));
        assert!(concurrence(&bad).is_err());
        // maximally mixed pair: G = 1, concurrence 0
        let mixed = QubitDensity::new(2, CMatrix::from_fn(4, 4, |i, j| Complex::new(if i == j { 0.25 } else { 0.0 }, 0.0))).unwrap();
        assert!(close(genuine_entanglement(&mixed).unwrap(), 1.0, 1e-15));
        assert!(concurrence(&mixed.rho).unwrap() < 1e-12);
    }

    #[test]
    fn degenerate_partners_share_entanglement() {
        for n in [3usize, 4] {
            let b = collective_basis::<f64>(n).unwrap();
            for p in [0.2, 0.5, 0.9] {
                let e: Vec<f64> = (1..n)
                    .map(|i| genuine_entanglement(&density_operator(&b.partner_form(i), p).unwrap()).unwrap())
                    .collect();
                assert!(e.iter().all(|x| close(*x, e[0], 1e-14)), "{e:?}");
                let first = genuine_entanglement(&density_operator(&b.states[1], p).unwrap()).unwrap();
                assert!(close(first, e[0], 1e-14));
            }
        }
    }

    #[test]
    fn trace_of_resonant_pair() {
        let d = 1e13;
        let rp = ResonanceParams::with_ratio(4.5e15, d, 30.0, 0.95);
        let mode = CollectiveMode::for_resonance(2, 0.95);
        let cfg = DynamicsConfig::uniform(10.0 / d, 4001);
        let tr = entanglement_trace(&mode, &rp, &cfg).unwrap();
        assert_eq!(tr.p[0], 0.0);
        assert_eq!(tr.e_g[0], 0.0);
        let pmax = tr.max_p();
        assert!(tr.max_e_g() <= 2.0 / 3.0 + 1e-12);
        if pmax <= 0.5 {
            assert!(close(tr.max_e_g(), 8.0 / 3.0 * pmax * (1.0 - pmax), 1e-12));
        }
        let conc = tr.concurrence.as_ref().unwrap();
        for (c, p) in conc.iter().zip(&tr.p) {
            assert!(close(*c, *p, 1e-10));
        }
        let weak = ResonanceParams::with_ratio(4.5e15, d, 2.0, 0.95);
        assert!(matches!(
            entanglement_trace(&mode, &weak, &cfg),
            Err(EntanglementError::Dynamics(DynamicsError::WeakCoupling { .. }))
        ));
    }
}
