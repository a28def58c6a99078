//! Dense complex linear algebra: LU with condition estimate, restarted GMRES
//! and a Hermitian eigensolver.

use super::{cr, NumericsError, Real};
use num_complex::Complex;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![cr(T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = cr(T::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = self.data[i * self.cols + j] + v;
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).fold(cr(T::zero()), |a, (m, v)| a + *m * *v))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == cr(T::zero()) {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d = *d + a * *b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> T {
        self.data
            .chunks(self.cols)
            .map(|r| r.iter().fold(T::zero(), |a, v| a + v.norm()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Max absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |a, i| a + self.get(i, j).norm()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn lu(&self) -> Result<LuFactors<T>, NumericsError> {
        LuFactors::new(self.clone())
    }
}

/// `PA = LU` with partial pivoting, packed in place.
#[derive(Clone, Debug)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
    norm_one: T,
}

impl<T: Real> LuFactors<T> {
    pub fn new(a: CMatrix<T>) -> Result<Self, NumericsError> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm_one = a.norm_one();
        let mut lu = a.data;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut piv, mut best) = (k, T::zero());
            for i in k..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(NumericsError::IllConditioned { condition: f64::INFINITY });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let inv = cr(T::one()) / lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            for row in tail.chunks_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f == cr(T::zero()) {
                    continue;
                }
                for j in (k + 1)..n {
                    row[j] = row[j] - f * pivot_row[j];
                }
            }
        }
        Ok(Self { n, lu, perm, norm_one })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(cr(T::zero()), |a, (l, v)| a + *l * *v);
            x[i] = x[i] - s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(cr(T::zero()), |a, (u, v)| a + *u * *v);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solve `Aᴴ x = b`.
    pub fn solve_adjoint(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        // Aᴴ = Uᴴ Lᴴ P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = cr(T::zero());
            for k in 0..i {
                s = s + self.lu[k * n + i].conj() * y[k];
            }
            y[i] = (y[i] - s) / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = cr(T::zero());
            for k in (i + 1)..n {
                s = s + self.lu[k * n + i].conj() * y[k];
            }
            y[i] = y[i] - s;
        }
        let mut x = vec![cr(T::zero()); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    pub fn inverse_norm_one_estimate(&self) -> T {
        let n = self.n;
        let mut x = vec![cr(T::one() / T::of_usize(n)); n];
        let mut est = T::zero();
        for _ in 0..5 {
            let y = self.solve(&x);
            let new = y.iter().fold(T::zero(), |a, v| a + v.norm());
            if new <= est {
                break;
            }
            est = new;
            let xi: Vec<Complex<T>> = y
                .iter()
                .map(|v| {
                    let r = v.norm();
                    if r == T::zero() { cr(T::one()) } else { *v / r }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (mut j, mut zmax) = (0, T::zero());
            for (i, v) in z.iter().enumerate() {
                if v.norm() > zmax {
                    zmax = v.norm();
                    j = i;
                }
            }
            let zx = z.iter().zip(&x).fold(cr(T::zero()), |a, (p, q)| a + p.conj() * *q);
            if zmax <= zx.re {
                break;
            }
            x = vec![cr(T::zero()); n];
            x[j] = cr(T::one());
        }
        est
    }

    /// Estimated 1-norm condition number.
    pub fn condition_estimate(&self) -> T {
        self.norm_one * self.inverse_norm_one_estimate()
    }

    /// Fail with [`NumericsError::IllConditioned`] above `limit`.
    pub fn check_condition(&self, limit: T) -> Result<T, NumericsError> {
        let cond = self.condition_estimate();
        if !cond.is_finite() || cond > limit {
            return Err(NumericsError::IllConditioned { condition: cond.to_f64().unwrap_or(f64::INFINITY) });
        }
        Ok(cond)
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome<T> {
    pub solution: Vec<Complex<T>>,
    pub residual: T,
    pub iterations: usize,
}

fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt()
}

/// Restarted GMRES(m) for `A x = b` with a matrix-free operator. `residual`
/// is relative to `‖b‖`. `x0` is an optional starting guess.
pub fn gmres<T: Real>(
    apply: impl Fn(&[Complex<T>]) -> Vec<Complex<T>>,
    b: &[Complex<T>],
    x0: Option<&[Complex<T>]>,
    restart: usize,
    tol: T,
    max_iter: usize,
) -> Result<GmresOutcome<T>, NumericsError> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![cr(T::zero()); n], |v| v.to_vec());
    if bnorm == T::zero() {
        return Ok(GmresOutcome { solution: vec![cr(T::zero()); n], residual: T::zero(), iterations: 0 });
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut rel = T::infinity();
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(p, q)| *p - *q).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresOutcome { solution: x, residual: rel, iterations: total });
        }
        let mut v: Vec<Vec<Complex<T>>> = vec![r.iter().map(|z| *z / beta).collect()];
        let mut h = vec![vec![cr(T::zero()); m]; m + 1];
        let mut cs = vec![cr(T::zero()); m];
        let mut sn = vec![cr(T::zero()); m];
        let mut g = vec![cr(T::zero()); m + 1];
        g[0] = cr(beta);
        let mut k_used = 0;
        for j in 0..m {
            if total >= max_iter {
                break;
            }
            total += 1;
            let mut w = apply(&v[j]);
            // modified Gram–Schmidt with one reorthogonalization pass
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = vi.iter().zip(&w).fold(cr(T::zero()), |a, (p, q)| a + p.conj() * *q);
                    h[i][j] = h[i][j] + hij;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk = *wk - hij * *vk;
                    }
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = cr(hn);
            for i in 0..j {
                let t = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == T::zero() {
                cs[j] = cr(T::one());
                sn[j] = cr(T::zero());
            } else {
                cs[j] = a / den;
                sn[j] = bb / den;
            }
            h[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            h[j + 1][j] = cr(T::zero());
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            k_used = j + 1;
            rel = g[j + 1].norm() / bnorm;
            if rel <= tol || hn == T::zero() {
                break;
            }
            v.push(w.iter().map(|z| *z / hn).collect());
        }
        let mut y = vec![cr(T::zero()); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in (i + 1)..k_used {
                s = s - h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[i]) {
                *xk = *xk + *yi * *vk;
            }
        }
        if rel <= tol {
            let ax = apply(&x);
            let true_rel = norm2(&b.iter().zip(&ax).map(|(p, q)| *p - *q).collect::<Vec<_>>()) / bnorm;
            if true_rel <= tol * T::lit(10.0) {
                return Ok(GmresOutcome { solution: x, residual: true_rel, iterations: total });
            }
        }
    }
    Err(NumericsError::NotConverged { residual: rel.to_f64().unwrap_or(f64::NAN), iterations: total })
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns ascending eigenvalues and column eigenvectors.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |s, (i, j)| s + m.get(i, j).norm_sqr());
        let diag: T = (0..n).fold(T::zero(), |s, i| s + m.get(i, i).norm_sqr());
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // phase so the pair reduces to a real symmetric 2×2 problem
                let ph = apq / r;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let cth = T::one() / (t * t + T::one()).sqrt();
                let sth = t * cth;
                // G acts on columns p, q: [c, -s·ph; s·conj(ph), c] structure
                let gp_p = cr(cth);
                let gq_p = ph.conj() * (-sth);
                let gp_q = ph * sth;
                let gq_q = cr(cth);
                // M ← Gᴴ M G
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, mkp * gp_p + mkq * gq_p);
                    m.set(k, q, mkp * gp_q + mkq * gq_q);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, gp_p.conj() * mpk + gq_p.conj() * mqk);
                    m.set(q, k, gp_q.conj() * mpk + gq_q.conj() * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * gp_p + vkq * gq_p);
                    v.set(k, q, vkp * gp_q + vkq * gq_q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<T> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, col| v.get(r, order[col]));
    (sorted_vals, vecs)
}
