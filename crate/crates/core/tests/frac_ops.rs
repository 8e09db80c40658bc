use mcss_core::frac_ops::{
    dpi_zero, fracdiff, fracdiff_fft, fracdiff_naive, kappa_series, pi_coeffs, pi_coeffs_gamma,
    pi_coeffs_with_derivative, FftConvolver,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn pi_recursion_matches_gamma_ratio() {
    for &a in &[0.3f64, -0.4, 0.5, 1.7, -1.3, 2.2] {
        let p = pi_coeffs(a, 201).coeffs;
        for (j, &v) in p.iter().enumerate() {
            let g = pi_coeffs_gamma(a, j).unwrap();
            assert!((v - g).abs() <= 1e-10 * g.abs().max(1e-12), "a={a} j={j}: {v} vs {g}");
        }
    }
}

#[test]
fn pi_coefficients_of_integer_orders() {
    // Δ^{-1} has all ones; Δ^{1} = 1 − L
    assert!(pi_coeffs(1.0, 10).coeffs.iter().all(|&v| v == 1.0));
    assert_eq!(pi_coeffs(-1.0, 4).coeffs, vec![1.0, -1.0, 0.0, 0.0]);
    assert_eq!(pi_coeffs(0.0, 3).coeffs, vec![1.0, 0.0, 0.0]);
    assert!(pi_coeffs_gamma(-2.0, 3).is_err());
}

#[test]
fn pi_derivative_matches_finite_difference() {
    let (a, h) = (0.35f64, 1e-6);
    let (_, dp) = pi_coeffs_with_derivative(a, 100);
    let up = pi_coeffs(a + h, 100).coeffs;
    let dn = pi_coeffs(a - h, 100).coeffs;
    for j in 0..100 {
        let fd = (up[j] - dn[j]) / (2.0 * h);
        assert!((dp[j] - fd).abs() < 1e-8 * fd.abs().max(1.0), "j={j}");
    }
}

#[test]
fn kappa_is_shifted_pi() {
    let k = kappa_series(0.3f64, 50);
    let p = pi_coeffs(0.7, 50).coeffs;
    assert_eq!(k.k0, p);
    let h = 1e-6;
    let up = kappa_series(0.3 + h, 50).k0;
    let dn = kappa_series(0.3 - h, 50).k0;
    for j in 0..50 {
        assert!((k.k1[j] - (up[j] - dn[j]) / (2.0 * h)).abs() < 1e-8);
    }
}

#[test]
fn dpi_zero_matches_derivatives_at_zero() {
    let n = 60;
    let z = dpi_zero::<f64>(n);
    let h = 1e-4;
    let up = pi_coeffs(h, n).coeffs;
    let mid = pi_coeffs(0.0, n).coeffs;
    let dn = pi_coeffs(-h, n).coeffs;
    for j in 1..n {
        let d1 = (up[j] - dn[j]) / (2.0 * h);
        let d2 = (up[j] - 2.0 * mid[j] + dn[j]) / (h * h);
        assert!((z.d1[j] - d1).abs() < 1e-7, "j={j}");
        assert!((z.d2[j] - d2).abs() < 1e-5, "j={j}");
    }
}

#[test]
fn fft_and_naive_agree_across_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in (1..=1024).step_by(37).chain([1, 2, 127, 128, 129, 1024]) {
        let x: Vec<f64> = (0..t).map(|_| rng.random::<f64>() - 0.5).collect();
        for d in [-0.8, -0.3, 0.2, 0.45, 1.0, 1.4] {
            let a = fracdiff_fft(&x, d);
            let b = fracdiff_naive(&x, d);
            assert!(max_rel(&a, &b) < 1e-10, "T={t} d={d}");
        }
    }
}

#[test]
fn integer_differences_are_exact() {
    let x: Vec<f64> = (1..=10).map(|v| (v * v) as f64).collect();
    let d1 = fracdiff_naive(&x, 1.0);
    let want: Vec<f64> = (0..10).map(|i| if i == 0 { 1.0 } else { x[i] - x[i - 1] }).collect();
    assert_eq!(d1, want);
    assert_eq!(fracdiff_naive(&x, 0.0), x);
}

#[test]
fn fracdiff_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
    let back = fracdiff(&fracdiff(&x, 0.37), -0.37);
    assert!(max_rel(&back, &x) < 1e-10);
}

#[test]
fn convolver_reuses_spectrum() {
    let conv = FftConvolver::<f64>::new(200);
    let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
    let xh = conv.spectrum(&x);
    for d in [0.1, 0.6] {
        let w = pi_coeffs(-d, 200).coeffs;
        assert!(max_rel(&conv.apply_spectrum(&xh, &w), &fracdiff_naive(&x, d)) < 1e-10);
    }
}

#[test]
fn f32_fracdiff_is_close() {
    let x: Vec<f32> = (0..256).map(|i| ((i * 7 % 13) as f32) - 6.0).collect();
    let a = fracdiff(&x, 0.3f32);
    let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let b = fracdiff(&xd, 0.3);
    let a64: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    assert!(max_rel(&a64, &b) < 1e-4);
}

proptest! {
    #[test]
    fn fft_equals_naive(x in prop::collection::vec(-10.0f64..10.0, 1..400), d in -1.5f64..1.5) {
        prop_assert!(max_rel(&fracdiff_fft(&x, d), &fracdiff_naive(&x, d)) < 1e-10);
    }

    #[test]
    fn fracdiff_is_linear(x in prop::collection::vec(-5.0f64..5.0, 2..200), y_scale in -3.0f64..3.0, d in -1.0f64..1.0) {
        let y: Vec<f64> = x.iter().rev().copied().collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + y_scale * b).collect();
        let lhs = fracdiff(&combo, d);
        let fx = fracdiff(&x, d);
        let fy = fracdiff(&y, d);
        let rhs: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a + y_scale * b).collect();
        prop_assert!(max_rel(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn semigroup(x in prop::collection::vec(-5.0f64..5.0, 1..150), a in -0.9f64..0.9, b in -0.9f64..0.9) {
        let two = fracdiff(&fracdiff(&x, a), b);
        let one = fracdiff(&x, a + b);
        prop_assert!(max_rel(&two, &one) < 1e-9);
    }
}
