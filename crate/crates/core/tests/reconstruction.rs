use approx::assert_abs_diff_eq;
use sspde_core::calculus::{build_ufield, GridGeometry, MollifierKernel, SemigroupLadder, DEPTH_CAP};
use sspde_core::model::Model;
use sspde_core::noise::{gpam_lolli_series, sample_gpam_noise, RegularizationSpec};
use sspde_core::reconstruction::{error_scaling_study, lambda_nl, reconstruct_product, LocalFamily};
use sspde_core::solver::Sigma;
use sspde_core::torus::{GridNode, TorusLattice};
use sspde_core::{GridField, SpaceTimeField, SpaceTimeSeries};

const DT: f64 = 1.0 / 256.0;

fn lattice(n: usize) -> TorusLattice {
    TorusLattice::new(n).unwrap()
}

fn evolving(l: TorusLattice, f: impl Fn(f64, f64, f64) -> f64, slices: usize) -> SpaceTimeSeries {
    let s = (0..slices).map(|k| GridField::from_fn(l, |x, y| f(k as f64 * DT, x, y))).collect();
    SpaceTimeSeries::Stored(SpaceTimeField::new(0.0, DT, s).unwrap())
}

fn smooth_u(t: f64, x: f64, y: f64) -> f64 {
    0.4 + 0.3 * (x + t).cos() + 0.2 * (2.0 * y - x).sin()
}

/// Smooth time-dependent noise with a smooth stand-in lollipop.
fn smooth_model(n: usize, slices: usize, c: f64) -> Model<f64> {
    let l = lattice(n);
    let xi = evolving(l, |t, x, y| (3.0 * x - y).cos() + 0.5 * (x + 2.0 * y + t).sin(), slices);
    let lolli = evolving(l, |t, x, y| 0.2 * (x - y).sin() * (1.0 + t), slices);
    Model::new(vec![xi], vec![lolli], vec![vec![c]], 0.1).unwrap()
}

fn gpam_model(n: usize, slices: usize, seed: u64) -> Model<f64> {
    let noise = sample_gpam_noise(lattice(n), RegularizationSpec::for_grid(lattice(n)), seed).unwrap();
    Model::gpam(&noise, 0.0, DT, slices, 0.1).unwrap()
}

fn ladder(n: usize, scale: f64, depth: usize) -> SemigroupLadder<f64> {
    SemigroupLadder::new(&MollifierKernel::canonical(), scale, depth, DT, 2.0 * std::f64::consts::PI / n as f64).unwrap()
}

#[test]
fn constant_family_has_no_levels() {
    let m = smooth_model(32, 129, 0.0);
    let fam = LocalFamily::constant(m.noises[0].clone());
    let lad = ladder(32, 0.25, 4);
    let r = lambda_nl(&fam, &m.geometry(), GridNode::new(128, 5, 9), &lad, 4).unwrap();
    assert!(r.levels.iter().all(|v| v.abs() <= 1e-14), "{:?}", r.levels);
    assert!(r.value.abs() <= 1e-13);
    let direct = lad.full().apply(GridNode::new(128, 5, 9), |s, i, j| m.noises[0].value(s as usize, i, j));
    assert_abs_diff_eq!(r.reconstruction(), direct, epsilon = 1e-12);
}

#[test]
fn frozen_value_matches_direct_quadrature() {
    let l = lattice(32);
    let u = evolving(l, smooth_u, 129);
    let geo = GridGeometry::of(&u);
    let fam = LocalFamily::frozen_value(u.clone());
    let lad = ladder(32, 0.25, DEPTH_CAP);
    let z = GridNode::new(128, 11, 3);
    let uz = u.value(128, 11, 3);
    let at = |s: isize, i: isize, j: isize| u.value(s as usize, i, j);
    for n in 1..=DEPTH_CAP {
        let r = lambda_nl(&fam, &geo, z, &lad, n).unwrap();
        let oracle = lad.head(n).apply(z, at) - uz;
        assert!((r.value - oracle).abs() <= 1e-10, "depth {n}: {} vs {oracle}", r.value);
        assert!(r.telescoping_defect() <= 1e-8);
    }
    let r = lambda_nl(&fam, &geo, z, &lad, DEPTH_CAP).unwrap();
    let target = lad.full().apply(z, at) - uz;
    assert!((r.value - target).abs() <= 1e-6);
}

#[test]
fn telescoping_identity_on_gpam_input() {
    let n = 64;
    let m = gpam_model(n, 129, 4);
    let u = gpam_lolli_series(&sample_gpam_noise(lattice(n), RegularizationSpec::for_grid(lattice(n)), 9).unwrap(), 0.0, DT, 129);
    let uf = build_ufield(u, &m, Sigma::Sin(1.0)).unwrap();
    let lad = ladder(n, 0.25, 4);
    for z in [GridNode::new(128, 0, 0), GridNode::new(100, 40, 17)] {
        let r = reconstruct_product(&m, &uf, z, &lad, 4).unwrap();
        assert!(r.telescoping_defect() <= 1e-8, "{}", r.telescoping_defect());
        assert_eq!(r.levels.len(), 4);
    }
}

#[test]
fn unit_sigma_reconstructs_the_noise_pairing() {
    let m = smooth_model(32, 129, 0.7);
    let u = evolving(lattice(32), smooth_u, 129);
    let uf = build_ufield(u, &m, Sigma::Constant(1.0)).unwrap();
    let lad = ladder(32, 0.25, 4);
    let z = GridNode::new(128, 2, 30);
    let r = reconstruct_product(&m, &uf, z, &lad, 4).unwrap();
    let direct = lad.full().apply(z, |s, i, j| m.noises[0].value(s as usize, i, j));
    assert_abs_diff_eq!(r.reconstruction(), direct, epsilon = 1e-12);
}

#[test]
fn linear_sigma_matches_the_literal_product() {
    let n = 64;
    let m = smooth_model(n, 129, 0.0);
    let u = evolving(lattice(n), smooth_u, 129);
    let uf = build_ufield(u.clone(), &m, Sigma::Linear(1.0)).unwrap();
    let lad = ladder(n, 0.25, 4);
    let product = |s: isize, i: isize, j: isize| u.value(s as usize, i, j) * m.noises[0].value(s as usize, i, j);
    let mut sup: f64 = 0.0;
    for s in 0..129 {
        for i in 0..n as isize {
            for j in 0..n as isize {
                sup = sup.max(product(s, i, j).abs());
            }
        }
    }
    for z in [GridNode::new(128, 7, 7), GridNode::new(90, 33, 50)] {
        let r = reconstruct_product(&m, &uf, z, &lad, 4).unwrap();
        let literal = lad.full().apply(z, product);
        assert!((r.reconstruction() - literal).abs() <= 1e-3 * sup, "{} vs {literal}", r.reconstruction());
    }
}

#[test]
fn renormalization_shift_is_exact() {
    let (c0, c1) = (0.0, 0.35);
    let u = evolving(lattice(32), smooth_u, 129);
    let z = GridNode::new(128, 12, 4);
    let lad = ladder(32, 0.25, 4);
    let run = |c: f64| {
        let m = smooth_model(32, 129, c);
        let uf = build_ufield(u.clone(), &m, Sigma::Linear(1.0)).unwrap();
        reconstruct_product(&m, &uf, z, &lad, 4).unwrap().reconstruction()
    };
    // σ′σ(u) = u for σ(u) = u; the C term is reconstructed against the kernel
    let shift = run(c1) - run(c0);
    let want = -(c1 - c0) * lad.full().apply(z, |s, i, j| u.value(s as usize, i, j));
    assert_abs_diff_eq!(shift, want, epsilon = 1e-12);
    // and is −σ′σ(u(z))ΔC up to the oscillation of u over the kernel
    let frozen = -(c1 - c0) * u.value(128, 12, 4);
    assert!((shift - frozen).abs() <= (c1 - c0) * 0.5 * 0.25);
}

#[test]
fn reconstruction_guards() {
    let m = smooth_model(32, 129, 0.0);
    let fam = LocalFamily::constant(m.noises[0].clone());
    let lad = ladder(32, 0.25, 3);
    assert!(lambda_nl(&fam, &m.geometry(), GridNode::new(128, 0, 0), &lad, 4).is_err());
    // t = 0.125 < 4L²
    assert!(lambda_nl(&fam, &m.geometry(), GridNode::new(32, 0, 0), &lad, 2).is_err());
}

#[test]
fn error_scaling_degenerate_cases() {
    let l = lattice(32);
    let zero = SpaceTimeSeries::time_constant(GridField::zeros(l), 0.0, DT, 129);
    let m = Model::new(vec![zero.clone()], vec![zero], vec![vec![0.0]], 0.1).unwrap();
    let u = evolving(l, smooth_u, 129);
    let uf = build_ufield(u.clone(), &m, Sigma::Sin(1.0)).unwrap();
    let psi = MollifierKernel::canonical();
    let scales = [0.25, 0.125];
    let bases = [GridNode::new(128, 0, 0), GridNode::new(128, 9, 21)];
    let r = error_scaling_study(&m, &uf, &psi, &scales, &bases).unwrap();
    assert!(r.rows.iter().all(|row| row.abs_error == 0.0));
    assert!(r.exponent.is_infinite());
    // constant σ leaves only the noise term, which the family reproduces
    let g = gpam_model(32, 129, 1);
    let uf = build_ufield(u, &g, Sigma::Constant(2.0)).unwrap();
    let r = error_scaling_study(&g, &uf, &psi, &scales, &bases).unwrap();
    assert!(r.rows.iter().all(|row| row.abs_error <= 1e-12));
    assert_abs_diff_eq!(r.target, 0.7, epsilon = 1e-12);
}
