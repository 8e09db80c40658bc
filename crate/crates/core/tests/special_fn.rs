use mcss_core::special_fn::{digamma, dilog, gen_binom, ln_gamma, ln_gamma_signed, ZETA2, ZETA3};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

// reference values from mpmath at 30 digits
#[test]
fn digamma_reference_values() {
    let cases = [
        (1.0, -0.577_215_664_901_532_86),
        (0.5, -1.963_510_026_021_423_5),
        (-0.5, 0.036_489_973_978_576_52),
        (2.5, 0.703_156_640_645_243_2),
        (10.3, 2.282_815_446_439_122_7),
        (0.1, -10.423_754_940_411_076),
        (-2.7, -1.115_347_129_140_689_6),
        (1e-3, -1000.575_571_931_810_3),
    ];
    for (x, want) in cases {
        let got = digamma(x).unwrap();
        assert!(close(got, want, 1e-13), "digamma({x}) = {got}, want {want}");
    }
}

#[test]
fn digamma_poles_are_errors() {
    for x in [0.0, -1.0, -7.0] {
        assert!(digamma(x).is_err());
    }
}

#[test]
fn ln_gamma_reference_values() {
    let cases = [
        (0.5, 0.572_364_942_924_700_1, 1.0),
        (3.7, 1.428_072_326_665_388_1, 1.0),
        (-1.5, 0.860_047_015_376_481, 1.0),
        (0.01, 4.599_479_878_042_022, 1.0),
        (25.0, 54.784_729_398_112_32, 1.0),
        (-2.3, 0.369_566_663_455_008, -1.0),
    ];
    for (x, want, sign) in cases {
        let (l, s) = ln_gamma_signed(x).unwrap();
        assert!(close(l, want, 1e-13), "lnGamma({x}) = {l}, want {want}");
        assert_eq!(s, sign);
    }
}

#[test]
fn dilog_reference_values() {
    let cases = [
        (-2.0, -1.436_746_366_883_681),
        (-1.0, -0.822_467_033_424_113_2),
        (-0.3, -0.280_074_333_759_582_9),
        (0.3, 0.326_129_510_075_476_06),
        (0.5, 0.582_240_526_465_012_5),
        (0.9, 1.299_714_723_004_958_8),
        (1.0, 1.644_934_066_848_226_4),
        (-10.0, -4.198_277_886_858_104),
        (0.99, 1.588_625_448_076_375_3),
    ];
    for (x, want) in cases {
        let got = dilog(x).unwrap();
        assert!(close(got, want, 1e-13), "Li2({x}) = {got}, want {want}");
    }
    assert!(dilog(1.5).is_err());
}

#[test]
fn gen_binom_reference_values() {
    let cases = [
        (0.6, -0.2, 0.824_014_154_703_299_6),
        (1.6, 0.8, 1.648_028_309_406_599_3),
        (-0.4, 0.3, 0.554_665_900_688_122_1),
        (2.5, 1.5, 2.5),
        (6.0, 2.0, 15.0),
    ];
    for (n, k, want) in cases {
        let got = gen_binom(n, k).unwrap();
        assert!(close(got, want, 1e-12), "C({n},{k}) = {got}, want {want}");
    }
    // denominator pole
    assert_eq!(gen_binom(0.5, -1.0).unwrap(), 0.0);
    assert!(gen_binom(-1.0, 0.5).is_err());
}

#[test]
fn zeta_constants() {
    let z2: f64 = (1..200_000u64).map(|k| 1.0 / (k as f64).powi(2)).sum::<f64>() + 1.0 / 200_000.0;
    assert!((z2 - ZETA2).abs() < 1e-10);
    let z3: f64 = (1..20_000u64).map(|k| 1.0 / (k as f64).powi(3)).sum::<f64>() + 0.5 / 20_000f64.powi(2);
    assert!((z3 - ZETA3).abs() < 1e-11);
}

#[test]
fn f32_kernels_track_f64() {
    let a = digamma(0.7f32).unwrap() as f64;
    assert!((a - digamma(0.7f64).unwrap()).abs() < 1e-5);
    let b = dilog(-0.4f32).unwrap() as f64;
    assert!((b - dilog(-0.4f64).unwrap()).abs() < 1e-6);
}

proptest! {
    #[test]
    fn digamma_recurrence(x in 0.05f64..40.0) {
        let lhs = digamma(x + 1.0).unwrap();
        let rhs = digamma(x).unwrap() + 1.0 / x;
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn digamma_is_derivative_of_ln_gamma(x in 0.2f64..30.0) {
        let h = 1e-5 * x.max(1.0);
        let fd = (ln_gamma(x + h).unwrap() - ln_gamma(x - h).unwrap()) / (2.0 * h);
        prop_assert!(close(digamma(x).unwrap(), fd, 1e-7));
    }

    #[test]
    fn dilog_matches_power_series(x in -0.8f64..0.8) {
        let series: f64 = (1..400).map(|k| x.powi(k) / (k as f64).powi(2)).sum();
        prop_assert!(close(dilog(x).unwrap(), series, 1e-14));
    }

    #[test]
    fn dilog_reflection(x in 0.01f64..0.99) {
        let lhs = dilog(x).unwrap() + dilog(1.0 - x).unwrap();
        let rhs = ZETA2 - x.ln() * (1.0 - x).ln();
        prop_assert!(close(lhs, rhs, 1e-13));
    }

    #[test]
    fn gen_binom_pascal(n in 0.1f64..6.0, k in 0.1f64..3.0) {
        prop_assume!((n - n.round()).abs() > 1e-3 && (k - k.round()).abs() > 1e-3);
        let lhs = gen_binom(n + 1.0, k).unwrap();
        let rhs = gen_binom(n, k).unwrap() + gen_binom(n, k - 1.0).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }
}
