use std::f64::consts::E;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use sspde_core::bounds::{
    apriori_bound, beta1, beta2, exponents, growth_audit, growth_envelope, kappa_bar, kappa_cubic, kappa_equation, l_tilde, massive_fixed_point, massive_recursion,
    moment_recursion, t_window, tilde_constants, windowed_mean_ratio, IntervalConstants,
};

fn fixed_point() -> f64 {
    (1.0 / (1.0 - 1.0 / E)).powi(2)
}

#[test]
fn kappa_bar_is_a_simple_root_in_range() {
    let k: f64 = kappa_bar();
    assert!(k > 0.132 && k < 1.0 / 3.0, "{k}");
    assert!(kappa_equation(k).abs() <= 1e-10);
    assert!(kappa_cubic(k).abs() <= 1e-10);
    assert!(kappa_cubic(k - 1e-6) > 0.0 && kappa_cubic(k + 1e-6) < 0.0);
    // derivative 6κ² + 6κ − 8 is bounded away from zero
    assert!((6.0 * k * k + 6.0 * k - 8.0).abs() > 1.0);
    // expanding the defining equation gives minus the cubic
    for x in [0.0, 0.05, 0.2, 0.3] {
        assert_abs_diff_eq!(kappa_cubic(x), -kappa_equation(x), epsilon = 1e-14);
    }
    let single: f32 = kappa_bar();
    assert!((f64::from(single) - k).abs() < 1e-5);
}

#[test]
fn exponent_arithmetic() {
    let ex = exponents(0.1f64, 0.01).unwrap();
    assert_abs_diff_eq!(ex.beta2, 2.2 / 2.8, epsilon = 1e-15);
    assert_abs_diff_eq!(ex.beta1, 2.2 / 2.8 + 1.1 * 0.11 / 0.9, epsilon = 1e-15);
    assert_abs_diff_eq!(ex.beta1, 0.920_158_730_158_730_2, epsilon = 1e-12);
    assert!(ex.valid);
    assert_abs_diff_eq!(ex.nu, 1.0 / (0.9 * (1.0 - ex.beta1).powi(2)), epsilon = 1e-9);
    assert_abs_diff_eq!(ex.e_gamma(1.8), 1.6 / 0.9, epsilon = 1e-15);
    assert_abs_diff_eq!(beta2(1e-9), 2.0 / 3.0, epsilon = 1e-8);
    assert_abs_diff_eq!(beta1(1e-9, 1e-9), 2.0 / 3.0, epsilon = 1e-8);
    for delta in [1e-9, 1e-3, 0.1] {
        assert!(!exponents(0.2, delta).unwrap().valid);
    }
    assert!(exponents(0.4, 0.01).is_err());
    assert!(exponents(0.1, 0.0).is_err());
}

#[test]
fn validity_switches_at_kappa_bar() {
    let k: f64 = kappa_bar();
    assert!(exponents(k - 1e-3, 1e-9).unwrap().valid);
    assert!(!exponents(k + 1e-3, 1e-9).unwrap().valid);
}

#[test]
fn time_window_structure() {
    let (g, k) = (1.8, 0.1);
    let huge_c2 = t_window(g, k, 1.0, 1e6, 1.0, 0.0);
    assert_abs_diff_eq!(huge_c2, 1e6f64.powf(-1.0 / 0.9), epsilon = 1e-18);
    let massless = t_window(g, k, 2.0, 3.0, 1.5, 0.0);
    let second = |cs: f64| 2f64.powf(-2.0 / 0.9) * cs.powf(-1.6 / 0.9);
    assert_abs_diff_eq!(massless, 3f64.powf(-1.0 / 0.9).min(second(1.5)), epsilon = 1e-15);
    // doubling C⋆ in the regime where the second term is active
    let (a, b) = (t_window(g, k, 5.0, 0.01, 1.0, 0.0), t_window(g, k, 5.0, 0.01, 2.0, 0.0));
    assert_abs_diff_eq!(b / a, 2f64.powf(-1.6 / 0.9), epsilon = 1e-14);
    assert!(t_window(g, k, 1.0, 1.0, 1.0, 10.0) < t_window(g, k, 1.0, 1.0, 1.0, 0.0));
}

#[test]
fn l_tilde_arithmetic() {
    let (k, d) = (0.1, 0.01);
    let unit = l_tilde(1.0, 1.0, 1.0, k, d, 0.0);
    assert_abs_diff_eq!(unit.value, 1.0, epsilon = 1e-15);
    let two = l_tilde(2.0, 1.0, 1.0, k, d, 0.0);
    let want = 2f64.powf(-2.0 / (3.0 - 2.0 * k)) * 2f64.powf(-(2.0 * k + 2.0 * d) / (2.0 * (1.0 - k)));
    assert_abs_diff_eq!(two.value, want, epsilon = 1e-15);
    let mut prev = f64::INFINITY;
    for m in [1.0, 10.0, 100.0, 1e4] {
        let v = l_tilde(1.0, 1.0, 1.0, k, d, m).value;
        assert!(v <= prev);
        prev = v;
    }
    assert!(prev < 1e-3);
    assert_eq!(unit.fits_window, unit.value <= unit.t1.sqrt() / 2.0);
}

#[test]
fn apriori_bound_shape() {
    let (k, d) = (0.1, 0.01);
    assert_eq!(apriori_bound(3.5, 0.0, 0.0, k, d).unwrap(), 3.5);
    let ex = exponents(k, d).unwrap();
    let p1 = 2.0 / ((1.0 - k) * (1.0 - ex.beta1));
    let a = apriori_bound(0.0, 1.3, 0.0, k, d).unwrap();
    let b = apriori_bound(0.0, 2.0 * 1.3, 0.0, k, d).unwrap();
    assert_abs_diff_eq!(b / a, 2f64.powf(p1), epsilon = 1e-9 * 2f64.powf(p1));
    let base = apriori_bound(1.0, 1.1, 1.2, k, d).unwrap();
    assert!(apriori_bound(1.0, 1.2, 1.2, k, d).unwrap() >= base);
    assert!(apriori_bound(1.0, 1.1, 1.3, k, d).unwrap() >= base);
    assert!(apriori_bound(2.0, 0.1, 0.1, k, d).unwrap() >= apriori_bound(1.0, 0.1, 0.1, k, d).unwrap());
    assert!(apriori_bound(1.0, 1.0, 1.0, 0.2, d).is_err());
}

#[test]
fn growth_envelope_examples() {
    let flat = growth_envelope(2.0f64, &[0.0; 5], 0.5).unwrap();
    assert!(flat.iteration.iter().chain(&flat.envelope).all(|&v| (v - 2.0).abs() <= 1e-14));
    let q = [0.5, 1.0, 0.25, 2.0];
    let lin = growth_envelope(1.0, &q, 0.0).unwrap();
    assert_abs_diff_eq!(*lin.iteration.last().unwrap(), 1.0 + q.iter().sum::<f64>(), epsilon = 1e-15);
    assert_abs_diff_eq!(*lin.envelope.last().unwrap(), 1.0 + 2.0 * 4.0, epsilon = 1e-15);
    let t = growth_envelope(1.0, &[1.0; 9], 0.5).unwrap();
    assert_abs_diff_eq!(t.envelope[9], 30.25, epsilon = 1e-12);
    let mut y = 1.0f64;
    for _ in 0..9 {
        y += y.sqrt();
    }
    assert_abs_diff_eq!(t.iteration[9], y, epsilon = 1e-12);
    assert!(y <= 30.25);
    assert!(growth_envelope(0.0, &[1.0], 0.5).is_err());
    assert!(growth_envelope(1.0, &[-1.0], 0.5).is_err());
    assert!(growth_envelope(1.0, &[1.0], 1.0).is_err());
}

#[test]
fn massive_recursion_examples() {
    let a: f64 = 0.5;
    let decay = massive_recursion(3.0, a, &[0.0; 6], 0.5).unwrap();
    for (n, (&y, &b)) in decay.iteration.iter().zip(&decay.envelope).enumerate() {
        assert_abs_diff_eq!(y, 3.0 * a.powi(n as i32), epsilon = 1e-15);
        assert_eq!(b, 3.0);
    }
    let target = fixed_point();
    assert_abs_diff_eq!(massive_fixed_point(1.0 / E, 1.0, 0.5), target, epsilon = 1e-12);
    assert_abs_diff_eq!(target, 2.5027, epsilon = 1e-4);
    for start in [0.5 * target, 2.0 * target] {
        let t = massive_recursion(start, 1.0 / E, &[1.0; 200], 0.5).unwrap();
        assert!((t.iteration[200] - target).abs() <= 1e-6);
        let rising = start < target;
        assert!(t.iteration.windows(2).all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] }));
        assert!(t.dominated(1e-12));
    }
}

#[test]
fn moment_fixed_point_certificate() {
    let z = fixed_point();
    for start in [z / 2.0, 2.0 * z] {
        let r = moment_recursion(start, 1.0 / E, 1.0, 0.5, 200).unwrap();
        assert_abs_diff_eq!(r.z_bar, z, epsilon = 1e-12);
        assert!(r.monotone);
        assert!((r.iterates[200] - z).abs() <= 1e-6);
    }
    assert_eq!(moment_recursion(1.0, 0.5, 0.0, 0.5, 10).unwrap().z_bar, 0.0);
    assert!(moment_recursion(1.0, 1.5, 1.0, 0.5, 10).is_err());
}

#[test]
fn audit_of_a_decaying_trajectory() {
    let ex = exponents(0.1, 0.01).unwrap();
    let y = [4.0, 3.0, 2.5, 2.5, 1.0];
    let c = IntervalConstants { c1: vec![0.0; 5], c2: vec![0.0; 5] };
    let rows = growth_audit(&y, &c, &ex).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    assert_abs_diff_eq!(rows[0].envelope, 4.0, epsilon = 1e-12);
    let c = IntervalConstants { c1: vec![1.0, 2.0, 1.5, 1.0, 1.0], c2: vec![0.5; 5] };
    assert_eq!(c.c1_tilde(), vec![1.0, 2.0, 2.0, 1.5, 1.0]);
    assert_eq!(tilde_constants(&[3.0, 1.0, 2.0]), vec![3.0, 3.0, 2.0]);
    assert!(growth_audit(&y[..1], &c, &ex).is_err());
}

#[test]
fn windowed_ratio() {
    let y: Vec<f64> = (1..=10).map(|n| if n <= 7 { 2.0 } else { 2.2 }).collect();
    assert_abs_diff_eq!(windowed_mean_ratio(&y, 5..=7, 8..=10).unwrap(), 1.1, epsilon = 1e-12);
    assert!(windowed_mean_ratio(&y, 11..=12, 8..=10).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn growth_envelope_dominates(y1 in 0.01..100.0f64, beta in 0.0..0.95f64, q in prop::collection::vec(0.0..10.0f64, 1..60)) {
        let t = growth_envelope(y1, &q, beta).unwrap();
        prop_assert!(t.dominated(1e-12));
    }

    #[test]
    fn massive_bound_dominates(y1 in 0.01..100.0f64, a in 0.01..0.99f64, beta in 0.0..0.95f64, r in prop::collection::vec(0.0..10.0f64, 1..60)) {
        let t = massive_recursion(y1, a, &r, beta).unwrap();
        prop_assert!(t.dominated(1e-12));
    }
}
