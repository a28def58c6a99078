//! Brute-force entanglement from explicit tensor products.
//!
//! Qubit 0 is the leftmost factor here, the opposite of the library
//! ordering; the measures do not depend on the labelling.

use num_complex::Complex;

type C = Complex<f64>;
type Mat = Vec<Vec<C>>;

fn kron(a: &[C], b: &[C]) -> Vec<C> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `|q_0 q_1 … q_{n−1}⟩` as a product of single-qubit kets.
pub fn product_ket(bits: &[bool]) -> Vec<C> {
    let ground = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let excited = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    bits.iter().fold(vec![C::new(1.0, 0.0)], |acc, &b| kron(&acc, if b { &excited } else { &ground }))
}

fn outer(a: &[C], b: &[C]) -> Mat {
    a.iter().map(|x| b.iter().map(|y| x * y.conj()).collect()).collect()
}

fn add_scaled(m: &mut Mat, other: &Mat, s: f64) {
    for (r, o) in m.iter_mut().zip(other) {
        for (x, y) in r.iter_mut().zip(o) {
            *x += y * s;
        }
    }
}

/// `(1 − p)|L⟩⟨L| + p|ψ⟩⟨ψ|` with `|ψ⟩ = Σ_A x_A |A⟩`.
pub fn single_excitation_density(x: &[f64], p: f64) -> Mat {
    let n = x.len();
    let ground = product_ket(&vec![false; n]);
    let mut psi = vec![C::new(0.0, 0.0); 1 << n];
    for (a, xa) in x.iter().enumerate() {
        let ket = product_ket(&(0..n).map(|q| q == a).collect::<Vec<_>>());
        for (s, k) in psi.iter_mut().zip(&ket) {
            *s += k * xa;
        }
    }
    let mut rho = vec![vec![C::new(0.0, 0.0); 1 << n]; 1 << n];
    add_scaled(&mut rho, &outer(&ground, &ground), 1.0 - p);
    add_scaled(&mut rho, &outer(&psi, &psi), p);
    rho
}

pub fn pure_density(psi: &[C]) -> Mat {
    outer(psi, psi)
}

fn digits(index: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (index >> (n - 1 - q)) & 1).collect()
}

/// Reduced state of qubits `(j, k)` by summing over all other digits.
pub fn reduce(rho: &Mat, n: usize, j: usize, k: usize) -> Mat {
    let mut out = vec![vec![C::new(0.0, 0.0); 4]; 4];
    let dim = 1 << n;
    for r in 0..dim {
        let dr = digits(r, n);
        for c in 0..dim {
            let dc = digits(c, n);
            let rest_equal = (0..n).filter(|&q| q != j && q != k).all(|q| dr[q] == dc[q]);
            if rest_equal {
                out[2 * dr[j] + dr[k]][2 * dc[j] + dc[k]] += rho[r][c];
            }
        }
    }
    out
}

fn trace_of_square(m: &Mat) -> f64 {
    let d = m.len();
    let mut t = C::new(0.0, 0.0);
    for i in 0..d {
        for l in 0..d {
            t += m[i][l] * m[l][i];
        }
    }
    t.re
}

/// `E_G = 2/(N(N−1)) Σ_l (N−l) · 4/3 [1 − 1/(N−l) Σ_j Tr ρ_{j,j+l}²]`.
pub fn e_g(rho: &Mat, n: usize) -> f64 {
    let mut total = 0.0;
    for l in 1..n {
        let s: f64 = (0..n - l).map(|j| trace_of_square(&reduce(rho, n, j, j + l))).sum();
        total += (n - l) as f64 * 4.0 / 3.0 * (1.0 - s / (n - l) as f64);
    }
    2.0 * total / (n * (n - 1)) as f64
}
