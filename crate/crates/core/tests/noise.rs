use std::f64::consts::{LN_2, PI, TAU};

use approx::assert_abs_diff_eq;
use num_complex::Complex;
use sspde_core::noise::{
    build_gpam_lolli, build_wiener_lolli, estimate_sg_renorm, gpam_lolli_series, gpam_renorm_constant, lollipop_residual, sample_gpam_noise, sample_gpam_noise_realization,
    sample_sg_noise, sample_wiener_noise, sample_wiener_noise_realization, wiener_ck_sq, wiener_lolli_spectral, wiener_renorm_constant, GpamNoise, RegularizationSpec, SgNoiseSpec,
    SgStream,
};
use sspde_core::stats::{mean, std_dev};
use sspde_core::torus::TorusLattice;
use sspde_core::{GridField, SpectralField};

fn lattice(n: usize) -> TorusLattice {
    TorusLattice::new(n).unwrap()
}

fn reg(eps: f64) -> RegularizationSpec<f64> {
    RegularizationSpec::new(eps).unwrap()
}

/// (2π)^{-2}Σ|k|^{-2} over 0 < |k| ≤ r, enumerated independently.
fn enumerate_gpam(r: f64) -> f64 {
    let m = r.floor() as i64;
    let mut acc = 0.0;
    for a in -m..=m {
        for b in -m..=m {
            let k2 = (a * a + b * b) as f64;
            if k2 > 0.0 && k2 <= r * r {
                acc += 1.0 / k2;
            }
        }
    }
    acc / (TAU * TAU)
}

#[test]
fn gpam_sampling_is_deterministic_and_real() {
    let l = lattice(32);
    let a = sample_gpam_noise(l, reg(0.1), 7).unwrap();
    let b = sample_gpam_noise(l, reg(0.1), 7).unwrap();
    let c = sample_gpam_noise(l, reg(0.1), 8).unwrap();
    assert_eq!(a.field().values(), b.field().values());
    assert_ne!(a.field().values(), c.field().values());
    assert!(a.xi_hat.hermitian_defect() <= 1e-12);
}

#[test]
fn gpam_cutoff_zeroes_high_modes() {
    let l = lattice(32);
    let r = reg(0.2);
    let xi = sample_gpam_noise(l, r, 3).unwrap();
    assert_eq!(r.k_max, 5);
    assert_eq!(xi.xi_hat.get([6, 0]), Complex::new(0.0, 0.0));
    assert_eq!(xi.xi_hat.get([4, 4]), Complex::new(0.0, 0.0));
    assert_ne!(xi.xi_hat.get([5, 0]), Complex::new(0.0, 0.0));
}

#[test]
fn gpam_cutoff_above_nyquist_is_rejected() {
    assert!(sample_gpam_noise(lattice(8), reg(0.2), 0).is_err());
}

#[test]
fn gpam_coefficient_variance() {
    let l = lattice(8);
    let r = reg(1.0);
    let samples: Vec<f64> = (0..10_000).map(|s| sample_gpam_noise(l, r, s).unwrap().xi_hat.get([1, 0]).norm_sqr()).collect();
    let want = 1.0 / (4.0 * PI * PI);
    assert!((mean(&samples) / want - 1.0).abs() < 0.05, "{}", mean(&samples));
}

#[test]
fn gpam_renorm_constant_enumeration() {
    assert_abs_diff_eq!(gpam_renorm_constant(&reg(1.0)), 4.0 / (4.0 * PI * PI), epsilon = 1e-15);
    assert_abs_diff_eq!(gpam_renorm_constant(&reg(0.5)), 7.0 / (4.0 * PI * PI), epsilon = 1e-15);
    assert_eq!(gpam_renorm_constant(&reg(2.0)), 0.0);
    for eps in [0.3, 0.07, 0.013] {
        assert_abs_diff_eq!(gpam_renorm_constant(&reg(eps)), enumerate_gpam(1.0 / eps), epsilon = 1e-12);
    }
}

#[test]
fn gpam_renorm_slope_settles() {
    let c: Vec<f64> = (4..=9).map(|j| gpam_renorm_constant(&reg(2f64.powi(-j)))).collect();
    let slopes: Vec<f64> = c.windows(2).map(|w| (w[1] - w[0]) / LN_2).collect();
    for w in slopes.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.05, "{slopes:?}");
    }
    let last = *slopes.last().unwrap();
    assert!((last * TAU - 1.0).abs() < 0.05, "slope {last} vs 1/(2π)");
}

#[test]
fn zero_mode_lollipop_is_linear_in_time() {
    let l = lattice(16);
    let mut xi = SpectralField::zeros(l);
    xi.set([0, 0], Complex::new(0.3, 0.0));
    let noise = GpamNoise::from_coefficients(xi, reg(1.0));
    let lolli = build_gpam_lolli(&noise, 2.5);
    assert!(lolli.max_abs_diff(&GridField::constant(l, 0.75)) < 1e-15);
}

#[test]
fn unit_mode_lollipop_divides_by_one() {
    let l = lattice(16);
    let a = Complex::new(0.2, -0.1);
    let mut xi = SpectralField::zeros(l);
    xi.set([1, 0], a);
    xi.set([-1, 0], a.conj());
    let noise = GpamNoise::from_coefficients(xi, reg(1.0));
    let want = GridField::from_fn(l, |x, _| 2.0 * (a * Complex::new(0.0, x).exp()).re);
    for t in [0.0, 1.0, 3.0] {
        assert!(build_gpam_lolli(&noise, t).max_abs_diff(&want) < 1e-14);
    }
}

#[test]
fn gpam_lollipop_solves_the_heat_equation() {
    let l = lattice(64);
    let noise = sample_gpam_noise(l, RegularizationSpec::for_grid(l), 11).unwrap();
    let (t, dt) = (0.4, 1e-3);
    let res = lollipop_residual(&build_gpam_lolli(&noise, t), &build_gpam_lolli(&noise, t + dt), dt, &noise.field()).unwrap();
    assert!(res <= 1e-10, "{res}");
    let series = gpam_lolli_series(&noise, 0.0, 0.5, 5);
    let inc = |s: usize| series.slice(s + 1).zip_map(&series.slice(s), |a, b| a - b);
    assert!(inc(0).max_abs_diff(&inc(3)) < 1e-14);
}

#[test]
fn gpam_realizations_are_independent_streams() {
    let l = lattice(16);
    let a = sample_gpam_noise_realization(l, reg(0.5), 1, 0).unwrap();
    let b = sample_gpam_noise_realization(l, reg(0.5), 1, 1).unwrap();
    assert_ne!(a.field().values(), b.field().values());
}

#[test]
fn wiener_coefficients() {
    let ck = wiener_ck_sq(0.5, [1, 0]);
    assert_abs_diff_eq!(ck, 2f64.powf(-0.5) / (TAU * TAU), epsilon = 1e-15);
    assert_abs_diff_eq!(ck, 0.017911, epsilon = 1e-6);
    assert_abs_diff_eq!(wiener_renorm_constant(0.5, &reg(1.0)), 4.0 * ck / (TAU * TAU), epsilon = 1e-15);
    assert_eq!(wiener_renorm_constant(0.5, &reg(2.0)), 0.0);
}

#[test]
fn wiener_renorm_ratio() {
    let delta = 0.5;
    let eps = 2f64.powi(-6);
    let ratio = wiener_renorm_constant(delta, &reg(eps / 2.0)) / wiener_renorm_constant(delta, &reg(eps));
    let want = 2f64.powf(2.0 * delta);
    assert!((ratio / want - 1.0).abs() < 0.15, "{ratio}");
}

#[test]
fn wiener_lollipop_is_stationary() {
    let l = lattice(8);
    let (dt, steps) = (0.1, 20);
    let mut early = Vec::new();
    let mut late = Vec::new();
    for r in 0..10_000 {
        let w = sample_wiener_noise_realization(l, 0.5, dt, steps, reg(1.0), 5, r).unwrap();
        let z = wiener_lolli_spectral(&w);
        early.push(z[0].get([1, 0]).norm_sqr());
        late.push(z[steps].get([1, 0]).norm_sqr());
    }
    let want = wiener_ck_sq(0.5, [1, 0]) / 2.0;
    assert_abs_diff_eq!(want, 0.0089553, epsilon = 1e-6);
    assert!((mean(&early) / want - 1.0).abs() < 0.05, "{}", mean(&early));
    assert!((mean(&late) / mean(&early) - 1.0).abs() < 0.05);
}

#[test]
fn wiener_zero_mode_is_brownian() {
    let l = lattice(8);
    let (dt, steps) = (0.05, 40);
    let c0 = wiener_ck_sq(0.5, [0, 0]);
    let mut half = Vec::new();
    let mut full = Vec::new();
    for r in 0..4_000 {
        let w = sample_wiener_noise_realization(l, 0.5, dt, steps, reg(1.0), 9, r).unwrap();
        let z = wiener_lolli_spectral(&w);
        half.push(z[steps / 2].get([0, 0]).re);
        full.push(z[steps].get([0, 0]).re);
    }
    let var = |v: &[f64]| std_dev(v).powi(2);
    assert!((var(&half) / (c0 * 1.0) - 1.0).abs() < 0.1);
    assert!((var(&full) / (c0 * 2.0) - 1.0).abs() < 0.1);
}

#[test]
fn wiener_lollipop_field_matches_spectral_states() {
    let l = lattice(16);
    let w = sample_wiener_noise(l, 0.3, 0.01, 5, reg(0.25), 2).unwrap();
    let field = build_wiener_lolli(&w);
    assert_eq!(field.len(), 6);
    assert!(w.increments.iter().all(|s| s.hermitian_defect() <= 1e-15));
    assert!(sample_wiener_noise(l, 1.0, 0.01, 5, reg(0.25), 2).is_err());
}

fn sg_spec(n: usize, beta: f64, eps: f64, dt: f64, t_end: f64) -> SgNoiseSpec<f64> {
    SgNoiseSpec {
        lattice: lattice(n),
        beta,
        reg: reg(eps),
        dt,
        t_end,
        seed: 4,
    }
}

#[test]
fn sine_gordon_degenerates_at_zero_beta() {
    let noise = sample_sg_noise(sg_spec(8, 0.0, 0.5, 0.01, 0.1)).unwrap();
    for s in noise.cos_noise.slices() {
        assert!(s.values().iter().all(|&v| v == 1.0));
    }
    for s in noise.sin_noise.slices() {
        assert!(s.values().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn sine_gordon_sampling_is_deterministic() {
    let spec = sg_spec(16, 1.0, 0.25, 0.01, 0.2);
    let a = sample_sg_noise(spec).unwrap();
    let b = sample_sg_noise(spec).unwrap();
    assert_eq!(a.cos_noise.slices().last().unwrap().values(), b.cos_noise.slices().last().unwrap().values());
    assert!(sample_sg_noise(sg_spec(16, 4.2, 0.25, 0.01, 0.2)).is_err());
}

#[test]
fn sine_gordon_field_variance_grows_logarithmically() {
    // Z̃ variance gains log 2/(4π) per halving of ε once the modes are stationary
    let (dt, t_end, n) = (1.0 / 256.0, 3.0, 32);
    let var = |eps: f64| {
        let spec = sg_spec(n, 1.0, eps, dt, t_end);
        let mut acc = Vec::new();
        for r in 0..200 {
            let mut s = SgStream::new(spec, r).unwrap();
            for _ in 0..spec.n_steps() {
                s.advance();
            }
            let z = s.z_tilde();
            acc.push(z.values().iter().map(|v| v * v).sum::<f64>() / z.values().len() as f64);
        }
        mean(&acc)
    };
    let v = [var(0.25), var(0.125), var(0.0625)];
    let want = LN_2 / (4.0 * PI);
    for w in v.windows(2) {
        assert!(((w[1] - w[0]) / want - 1.0).abs() < 0.3, "{v:?}");
    }
}

#[test]
fn sine_gordon_renorm_estimates() {
    let zero = estimate_sg_renorm(&sg_spec(8, 0.0, 0.5, 0.01, 0.2), 100).unwrap();
    assert_eq!(zero.c[1], [0.0, 0.0]);
    assert!(estimate_sg_renorm(&sg_spec(8, 0.0, 0.5, 0.01, 0.2), 99).is_err());
    // with cos noise ≡ 1 the cos lollipop solves ∂_t l = 1 from 0
    assert!((zero.c[0][0] - zero.t_eval).abs() <= 3.0 * zero.stderr[0][0] + 1e-12);

    let spec = sg_spec(8, 1.2, 0.5, 0.01, 0.2);
    let a = estimate_sg_renorm(&spec, 100).unwrap();
    let b = estimate_sg_renorm(&spec, 200).unwrap();
    let cross = b.c[0][1] + b.c[1][0];
    let se = (b.stderr[0][1].powi(2) + b.stderr[1][0].powi(2)).sqrt();
    assert!(cross.abs() <= 3.0 * se, "{cross} vs {se}");
    let shrink = a.stderr[0][0] / b.stderr[0][0];
    assert!((shrink / 2f64.sqrt() - 1.0).abs() < 0.25, "{shrink}");
}

#[test]
fn renorm_estimate_ignores_thread_count() {
    let spec = sg_spec(8, 1.0, 0.5, 0.01, 0.1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_sg_renorm(&spec, 100).unwrap())
    };
    assert_eq!(run(1), run(3));
}
