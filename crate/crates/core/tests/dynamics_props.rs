use hotspot::dynamics::{
    amplitude, extract_resonance, find_peaks, integrate_kernel, integrate_ode, CollectiveMode, DynamicsConfig, DynamicsError, FitOptions,
    KernelOptions, ModeKind, ResonanceParams,
};
use num_complex::Complex;
use proptest::prelude::*;

type C = Complex<f64>;

/// `C̈ + aĊ + κC = 0`, `C(0) = 0`, `Ċ(0) = S₀`, solved through its
/// characteristic roots.
fn two_root_solution(g: f64, rp: &ResonanceParams<f64>, detuning: f64, delta_t: f64, t: f64) -> C {
    let (w, d) = (rp.rabi, rp.delta_omega_m);
    let e = (-d * delta_t / 2.0).exp();
    let s0 = g.sqrt() * w * w * (d * e - w) * e / (2.0 * (w * w + d * d));
    let a = C::new(d, -detuning);
    let kappa = g * w * w / 4.0;
    let disc = (a * a - 4.0 * kappa).sqrt();
    let (r1, r2) = ((-a + disc) / 2.0, (-a - disc) / 2.0);
    ((r1 * t).exp() - (r2 * t).exp()) / (r1 - r2) * s0
}

fn mode(g: f64) -> CollectiveMode<f64> {
    CollectiveMode { g, kind: ModeKind::Superradiant, emitters: 2 }
}

#[test]
fn closed_form_matches_characteristic_roots() {
    for &g in &[1.5, 2.0, 4.0] {
        for &ratio in &[3.0, 12.0, 40.0] {
            let rp = ResonanceParams::with_ratio(4.8e15, 4e13, ratio, 0.9);
            let mut cfg = DynamicsConfig::uniform(20.0 / rp.delta_omega_m, 401);
            cfg.delta_t = 5e-15;
            let c = amplitude(&mode(g), &rp, &cfg).unwrap();
            for (t, v) in cfg.t_grid.iter().zip(&c) {
                let want = two_root_solution(g, &rp, 0.0, cfg.delta_t, *t);
                assert!((v - want).norm() < 1e-12, "g={g} ratio={ratio} t={t:e}");
            }
        }
    }
}

#[test]
fn detuned_kernel_and_ode_match_characteristic_roots() {
    let rp = ResonanceParams::with_ratio(4.8e15, 5e13, 15.0, 0.9);
    let mut cfg = DynamicsConfig::uniform(20.0 / rp.delta_omega_m, 301);
    cfg.detuning = 3.0 * rp.delta_omega_m;
    let k = integrate_kernel(&mode(2.0), &rp, &cfg, &KernelOptions::default()).unwrap();
    let ode = integrate_ode(&mode(2.0), &rp, &cfg, 200).unwrap();
    for (i, t) in cfg.t_grid.iter().enumerate() {
        let want = two_root_solution(2.0, &rp, cfg.detuning, 0.0, *t);
        assert!((k.amplitude[i] - want).norm() < 1e-3, "kernel at {t:e}");
        assert!((ode[i] - want).norm() < 1e-9, "ode at {t:e}");
    }
    assert!(matches!(amplitude(&mode(2.0), &rp, &cfg), Err(DynamicsError::Detuned { .. })));
}

#[test]
fn overdamped_closed_form_is_refused() {
    let rp = ResonanceParams::with_ratio(4.8e15, 5e13, 0.5, 0.9);
    let cfg = DynamicsConfig::uniform(1e-12, 11);
    assert!(matches!(amplitude(&mode(2.0), &rp, &cfg), Err(DynamicsError::Overdamped { .. })));
    // the kernel integrator has no such restriction
    let k = integrate_kernel(&mode(2.0), &rp, &cfg, &KernelOptions::default()).unwrap();
    let want = two_root_solution(2.0, &rp, 0.0, 0.0, 1e-12);
    assert!((k.amplitude[10] - want).norm() < 1e-4);
}

fn lorentzian_samples(w0: f64, d: f64, peak: f64, base: f64, slope: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let lo = w0 - 4.0 * d;
    let hi = w0 + 4.0 * d;
    let omega: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let gamma = omega.iter().map(|w| peak * d * d / ((w - w0).powi(2) + d * d) + base + slope * (w - w0)).collect();
    let ratio = omega.iter().map(|w| 0.9 - 1e-17 * (w - w0)).collect();
    (omega, gamma, ratio)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_lorentzian(
        w0 in 4.0e15f64..5.5e15,
        d in 1e13f64..8e13,
        peak in 1e14f64..1e17,
        base_frac in 0.0f64..0.2,
        slope_frac in -0.05f64..0.05,
        shift in -0.5f64..0.5,
    ) {
        let centre = w0 + shift * d;
        let (omega, gamma, ratio) = lorentzian_samples(centre, d, peak, base_frac * peak, slope_frac * peak / d, 41);
        let window = (omega[0], omega[40]);
        let rp = extract_resonance(&omega, &gamma, &ratio, window, &FitOptions::default()).unwrap();
        prop_assert!((rp.omega_m - centre).abs() <= 1e-6 * d);
        prop_assert!((rp.delta_omega_m - d).abs() <= 1e-6 * d);
        prop_assert!((rp.gamma - peak * (1.0 + base_frac)).abs() <= 1e-6 * peak);
        prop_assert!((rp.gamma_ratio - 0.9).abs() <= 1e-6);
        prop_assert!(rp.fit_residual < 1e-8);
    }

    #[test]
    fn kernel_matches_closed_form(g in 1.2f64..4.0, ratio in 4.0f64..40.0, delta_t_fs in 0.0f64..20.0) {
        let rp = ResonanceParams::with_ratio(4.8e15, 5e13, ratio, 0.9);
        let mut cfg = DynamicsConfig::uniform(20.0 / rp.delta_omega_m, 201);
        cfg.delta_t = delta_t_fs * 1e-15;
        let exact = amplitude(&mode(g), &rp, &cfg).unwrap();
        let k = integrate_kernel(&mode(g), &rp, &cfg, &KernelOptions::default()).unwrap();
        let err = exact.iter().zip(&k.amplitude).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(err <= 1e-3, "err {}", err);
        prop_assert!(k.richardson_error <= 1e-4);
    }

    #[test]
    fn peaks_are_local_maxima(y in prop::collection::vec(0.0f64..1.0, 3..60)) {
        for i in find_peaks(&y, 0.05) {
            prop_assert!(i > 0 && i + 1 < y.len());
            prop_assert!(y[i] >= y[i - 1] && y[i] >= y[i + 1]);
        }
    }
}

#[test]
fn fit_rejects_flat_data() {
    let omega: Vec<f64> = (0..41).map(|i| 4.5e15 + 1e12 * i as f64).collect();
    let gamma = vec![1e15; 41];
    let ratio = vec![0.0; 41];
    let r = extract_resonance(&omega, &gamma, &ratio, (omega[0], omega[40]), &FitOptions::default());
    assert!(matches!(r, Err(DynamicsError::NoPeak | DynamicsError::PoorFit { .. })), "{r:?}");
}
