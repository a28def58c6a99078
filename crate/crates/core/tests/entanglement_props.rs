mod common;

use common::entanglement as brute;
use hotspot::entanglement::{collective_basis, concurrence, density_operator, genuine_entanglement, reduced_pair, QubitDensity};
use num_complex::Complex;
use proptest::prelude::*;

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
}

fn state_strategy() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (2usize..=4).prop_flat_map(|n| (prop::collection::vec(-1.0f64..1.0, n), 0.0f64..=1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn e_g_matches_brute_force((x, p) in state_strategy()) {
        let Some(x) = normalized(&x) else { return Ok(()) };
        let rho = density_operator(&x, p).unwrap();
        let want = brute::e_g(&brute::single_excitation_density(&x, p), x.len());
        prop_assert!((genuine_entanglement(&rho).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn e_g_is_permutation_invariant((x, p) in state_strategy(), shift in 1usize..4) {
        let Some(x) = normalized(&x) else { return Ok(()) };
        let mut y = x.clone();
        y.rotate_left(shift % x.len());
        y.swap(0, x.len() - 1);
        let a = genuine_entanglement(&density_operator(&x, p).unwrap()).unwrap();
        let b = genuine_entanglement(&density_operator(&y, p).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-13);
    }

    #[test]
    fn measures_stay_in_unit_interval((x, p) in state_strategy()) {
        let Some(x) = normalized(&x) else { return Ok(()) };
        let rho = density_operator(&x, p).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-13);
        let e = genuine_entanglement(&rho).unwrap();
        prop_assert!((-1e-14..=1.0 + 1e-14).contains(&e));
        for j in 0..x.len() {
            for k in j + 1..x.len() {
                let pair = reduced_pair(&rho, j, k).unwrap();
                let c = concurrence(&pair).unwrap();
                prop_assert!((0.0..=1.0).contains(&c));
                // single-excitation pair states are X states: C = 2p|x_j x_k|
                prop_assert!((c - 2.0 * p * (x[j] * x[k]).abs()).abs() <= 1e-12, "{} vs {}", c, 2.0 * p * (x[j] * x[k]).abs());
            }
        }
    }

    #[test]
    fn reduced_pairs_match_brute_force((x, p) in state_strategy()) {
        let Some(x) = normalized(&x) else { return Ok(()) };
        let n = x.len();
        let rho = density_operator(&x, p).unwrap();
        let full = brute::single_excitation_density(&x, p);
        for j in 0..n {
            for k in j + 1..n {
                let lib = reduced_pair(&rho, j, k).unwrap();
                let b = brute::reduce(&full, n, j, k);
                // library: qubit j is the low bit; brute force: qubit j is the high digit
                for r in 0..4 {
                    for c in 0..4 {
                        let swap = |i: usize| ((i & 1) << 1) | (i >> 1);
                        prop_assert!((lib.get(r, c) - b[swap(r)][swap(c)]).norm() <= 1e-14);
                    }
                }
            }
        }
    }
}

#[test]
fn collective_bases_are_orthonormal() {
    for n in 2..=5 {
        let basis = collective_basis::<f64>(n).unwrap();
        let g = basis.gram();
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14, "n={n} ({i},{j}) {v}");
            }
        }
    }
}

#[test]
fn ghz_and_w_anchors() {
    let s = 0.5f64.sqrt();
    let mut ghz = vec![Complex::new(0.0, 0.0); 8];
    ghz[0] = Complex::new(s, 0.0);
    ghz[7] = Complex::new(s, 0.0);
    let e = genuine_entanglement(&QubitDensity::pure(3, &ghz).unwrap()).unwrap();
    assert!((e - 2.0 / 3.0).abs() < 1e-12);
    let w = [1.0 / 3f64.sqrt(); 3];
    let e = genuine_entanglement(&density_operator(&w, 1.0).unwrap()).unwrap();
    assert!((e - 16.0 / 27.0).abs() < 1e-12);
}
