use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use sspde_core::calculus::{DiscreteKernel, MollifierKernel};
use sspde_core::model::{Model, Realization, Realized, Symbol, SymbolTag};
use sspde_core::noise::{sample_gpam_noise, RegularizationSpec};
use sspde_core::stats::loglog_slope;
use sspde_core::torus::{GridNode, TorusLattice};
use sspde_core::{GridField, ParabolicPoint, SpaceTimeSeries};

const N: usize = 32;
const DT: f64 = 1.0 / 64.0;
const SLICES: usize = 33;

fn lattice(n: usize) -> TorusLattice {
    TorusLattice::new(n).unwrap()
}

fn gpam_model(n: usize, seed: u64) -> Model<f64> {
    let noise = sample_gpam_noise(lattice(n), RegularizationSpec::for_grid(lattice(n)), seed).unwrap();
    Model::gpam(&noise, 0.0, DT, SLICES, 0.1).unwrap()
}

fn point(m: &Model<f64>, node: GridNode) -> ParabolicPoint {
    m.geometry().point(node)
}

/// Two noises with prescribed constant lollipops and a full C matrix.
fn constant_model(xi: [f64; 2], lolli: [f64; 2], c: [[f64; 2]; 2]) -> Model<f64> {
    let l = lattice(16);
    let series = |v: f64| SpaceTimeSeries::time_constant(GridField::constant(l, v), 0.0, DT, SLICES);
    Model::new(
        xi.iter().map(|&v| series(v)).collect(),
        lolli.iter().map(|&v| series(v)).collect(),
        c.iter().map(|r| r.to_vec()).collect(),
        0.1,
    )
    .unwrap()
}

#[test]
fn homogeneity_table() {
    let k = 0.1;
    let h = |s: Symbol| s.homogeneity(k);
    assert_abs_diff_eq!(h(Symbol::NOISE), -1.1, epsilon = 1e-15);
    assert_abs_diff_eq!(h(Symbol::LOLLI), 0.9, epsilon = 1e-15);
    assert_abs_diff_eq!(h(Symbol::X), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(h(Symbol::XNOISE), -0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(h(Symbol::DUMBBELL), -0.2, epsilon = 1e-15);
    assert_eq!(Symbol::decorated(SymbolTag::Dumbbell, 1, 0).name(), "DUMBBELL");
}

#[test]
fn construction_validates_shapes() {
    let l = lattice(16);
    let s = || SpaceTimeSeries::time_constant(GridField::zeros(l), 0.0, DT, 4);
    assert!(Model::new(vec![s()], vec![s()], vec![vec![0.0]], 0.1).is_ok());
    assert!(Model::new(vec![s()], vec![s()], vec![vec![0.0, 0.0]], 0.1).is_err());
    assert!(Model::new(vec![s()], vec![], vec![vec![0.0]], 0.1).is_err());
    assert!(Model::new(vec![s()], vec![s()], vec![vec![0.0]], 0.4).is_err());
    assert!(Model::new(vec![s()], vec![s()], vec![vec![0.0]], 0.0).is_err());
    let other = SpaceTimeSeries::time_constant(GridField::zeros(lattice(32)), 0.0, DT, 4);
    assert!(Model::new(vec![s()], vec![other], vec![vec![0.0]], 0.1).is_err());
    let shifted = SpaceTimeSeries::time_constant(GridField::zeros(l), 0.5, DT, 4);
    assert!(Model::new(vec![s()], vec![shifted], vec![vec![0.0]], 0.1).is_err());
}

#[test]
fn gpam_lollipop_solves_the_heat_equation() {
    let m = gpam_model(N, 3);
    assert!(m.lolli_residual().unwrap() <= 1e-8);
}

#[test]
fn recentring_examples() {
    let m = gpam_model(N, 5);
    let z = GridNode::new(10, 4, 7);
    assert_eq!(m.value(z, z, Symbol::LOLLI), Realized::Scalar(0.0));
    let same_x = GridNode::new(20, 4, 7);
    assert_eq!(m.value(z, same_x, Symbol::X), Realized::Vector([0.0, 0.0]));
    let c = constant_model([2.0, 3.0], [1.0, -1.0], [[0.5, 0.25], [0.125, 4.0]]);
    let z = GridNode::new(3, 2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let s = Symbol::decorated(SymbolTag::Dumbbell, i, j);
            let Realization::Scalar(f) = c.realize(&point(&c, z), s).unwrap() else { panic!("dumbbell is scalar") };
            for slice in f.slices() {
                assert!(slice.values().iter().all(|&v| v == -c.renorm[i][j]));
            }
        }
    }
}

#[test]
fn x_uses_the_minimal_representative() {
    let m = gpam_model(N, 1);
    let z = GridNode::new(0, 0, 0);
    let h = 2.0 * PI / N as f64;
    let v = m.value(z, GridNode::new(0, N as isize - 1, 1), Symbol::X).vector().unwrap();
    assert_abs_diff_eq!(v[0], -h, epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], h, epsilon = 1e-14);
    let v = m.value(z, GridNode::new(0, N as isize / 2, 0), Symbol::X).vector().unwrap();
    assert!(v[0] > 0.0 && (v[0] - PI).abs() < 1e-14);
}

#[test]
fn realize_matches_pointwise_values() {
    let m = gpam_model(16, 2);
    let z = GridNode::new(5, 3, 9);
    let Realization::Vector([a, b]) = m.realize(&point(&m, z), Symbol::XNOISE).unwrap() else { panic!("XNOISE is a vector") };
    for s in [0usize, 5, 32] {
        for (i, j) in [(0, 0), (3, 9), (15, 1)] {
            let v = m.value(z, GridNode::new(s as isize, i, j), Symbol::XNOISE).vector().unwrap();
            assert_eq!(a.slice(s).get_wrapped(i, j), v[0]);
            assert_eq!(b.slice(s).get_wrapped(i, j), v[1]);
        }
    }
}

#[test]
fn off_grid_and_bad_decorations_are_errors() {
    let m = gpam_model(16, 2);
    assert!(m.node_of(&ParabolicPoint::new(0.3 * DT, [0.0, 0.0])).is_err());
    assert!(m.node_of(&ParabolicPoint::new(0.0, [0.1, 0.0])).is_err());
    assert!(m.node_of(&ParabolicPoint::new(SLICES as f64 * DT, [0.0, 0.0])).is_err());
    let z = ParabolicPoint::new(0.0, [0.0, 0.0]);
    assert!(m.realize(&z, Symbol::decorated(SymbolTag::Dumbbell, 0, 1)).is_err());
    assert!(m.cbp_residual(&z, &z, Symbol::decorated(SymbolTag::Noise, 1, 0)).is_err());
}

#[test]
fn base_point_change_vanishes_when_points_coincide() {
    let m = gpam_model(16, 4);
    let z = point(&m, GridNode::new(7, 2, 11));
    for s in [Symbol::NOISE, Symbol::LOLLI, Symbol::X, Symbol::XNOISE, Symbol::DUMBBELL] {
        assert_eq!(m.cbp_residual(&z, &z, s).unwrap(), 0.0, "{}", s.name());
    }
}

#[test]
fn pairing_examples() {
    let m = gpam_model(N, 8);
    let geo = m.geometry();
    let k = DiscreteKernel::from_mollifier(&MollifierKernel::canonical(), 0.5, geo.dt, geo.h());
    let z = GridNode::new(SLICES as isize - 1, 9, 20);
    let x = m.pair(z, Symbol::X, &k).unwrap().vector().unwrap();
    assert!(x[0].abs() <= 1e-8 && x[1].abs() <= 1e-8);

    let c = constant_model([2.5, 1.0], [7.0, 7.0], [[0.3, 0.0], [0.0, 0.0]]);
    let g = c.geometry();
    let k = DiscreteKernel::from_mollifier(&MollifierKernel::canonical(), 0.5, g.dt, g.h());
    let z = GridNode::new(SLICES as isize - 1, 0, 0);
    assert_abs_diff_eq!(c.pair(z, Symbol::NOISE, &k).unwrap().scalar().unwrap(), 2.5, epsilon = 1e-12);
    assert_abs_diff_eq!(c.pair(z, Symbol::DUMBBELL, &k).unwrap().scalar().unwrap(), -0.3, epsilon = 1e-12);

    let early = GridNode::new(1, 0, 0);
    assert!(c.pair(early, Symbol::NOISE, &k).is_err());
}

#[test]
fn pairing_is_linear_in_the_kernel() {
    let m = gpam_model(N, 6);
    let geo = m.geometry();
    let a = DiscreteKernel::from_mollifier(&MollifierKernel::canonical(), 0.5, geo.dt, geo.h());
    let b = DiscreteKernel::from_mollifier(&MollifierKernel::canonical(), 0.25, geo.dt, geo.h());
    let z = GridNode::new(SLICES as isize - 1, 3, 3);
    // brute-force a + 2b over a common padded support
    let pad = |k: &DiscreteKernel<f64>, t: usize, r: usize| {
        let mut out = k.clone();
        out.time.resize(t, 0.0);
        for ax in 0..2 {
            let extra = r - k.radius(ax);
            let mut v = vec![0.0; extra];
            v.extend_from_slice(&k.space[ax]);
            v.resize(2 * r + 1, 0.0);
            out.space[ax] = v;
        }
        out
    };
    let t = a.time_len().max(b.time_len());
    let r = a.radius(0).max(a.radius(1)).max(b.radius(0)).max(b.radius(1));
    let (pa, pb) = (pad(&a, t, r), pad(&b, t, r));
    let brute = |k: &DiscreteKernel<f64>, coef: f64, acc: &mut f64| {
        for q in 0..t {
            for i in -(r as isize)..=r as isize {
                for j in -(r as isize)..=r as isize {
                    let w = GridNode::new(z.s - q as isize, z.i + i, z.j + j);
                    *acc += coef * k.weight(q, i, j) * m.value(z, w, Symbol::DUMBBELL).scalar().unwrap();
                }
            }
        }
    };
    let mut combined = 0.0;
    brute(&pa, 1.0, &mut combined);
    brute(&pb, 2.0, &mut combined);
    let separate = m.pair(z, Symbol::DUMBBELL, &a).unwrap().scalar().unwrap() + 2.0 * m.pair(z, Symbol::DUMBBELL, &b).unwrap().scalar().unwrap();
    assert!((combined - separate).abs() <= 1e-10 * separate.abs().max(1.0));
}

#[test]
fn pairing_is_linear_in_the_noise() {
    let l = lattice(16);
    let f = GridField::from_fn(l, |x, y| x.sin() + (2.0 * y).cos());
    let g = GridField::from_fn(l, |x, y| (x - y).cos());
    let build = |a: f64, b: f64| {
        let xi = GridField::from_values(l, f.values().iter().zip(g.values()).map(|(u, v)| a * u + b * v).collect()).unwrap();
        let s = SpaceTimeSeries::time_constant(xi, 0.0, DT, SLICES);
        Model::new(vec![s.clone()], vec![s], vec![vec![0.0]], 0.1).unwrap()
    };
    let geo = build(1.0, 0.0).geometry();
    let k = DiscreteKernel::from_mollifier(&MollifierKernel::canonical(), 0.5, geo.dt, geo.h());
    let z = GridNode::new(SLICES as isize - 1, 5, 1);
    let p = |m: Model<f64>, s: Symbol| m.pair(z, s, &k).unwrap();
    for s in [Symbol::NOISE, Symbol::XNOISE] {
        let (a, b, ab) = (p(build(1.0, 0.0), s), p(build(0.0, 1.0), s), p(build(2.0, -3.0), s));
        match (a, b, ab) {
            (Realized::Scalar(a), Realized::Scalar(b), Realized::Scalar(ab)) => assert_abs_diff_eq!(ab, 2.0 * a - 3.0 * b, epsilon = 1e-12),
            (Realized::Vector(a), Realized::Vector(b), Realized::Vector(ab)) => {
                for c in 0..2 {
                    assert_abs_diff_eq!(ab[c], 2.0 * a[c] - 3.0 * b[c], epsilon = 1e-12);
                }
            }
            _ => panic!("mixed shapes"),
        }
    }
}

#[test]
fn lollipop_increment_exponent() {
    // spatial increments of the stationary lollipop along one axis
    let n = 256;
    let m = Model::gpam(&sample_gpam_noise(lattice(n), RegularizationSpec::for_grid(lattice(n)), 11).unwrap(), 0.0, DT, 1, 0.1).unwrap();
    let h = 2.0 * PI / n as f64;
    let steps = [2isize, 4, 8, 16, 32];
    let mut dist = Vec::new();
    let mut size = Vec::new();
    for &d in &steps {
        let mut acc = 0.0;
        let mut count = 0.0;
        for i in (0..n as isize).step_by(4) {
            for j in (0..n as isize).step_by(4) {
                let z = GridNode::new(0, i, j);
                let v = m.value(z, GridNode::new(0, i + d, j), Symbol::LOLLI).scalar().unwrap();
                acc += v * v;
                count += 1.0;
            }
        }
        dist.push(d as f64 * h);
        size.push((acc / count).sqrt());
    }
    let slope = loglog_slope(&dist, &size).unwrap();
    assert!((0.7..=1.05).contains(&slope), "slope {slope}");
}

fn node() -> impl Strategy<Value = GridNode> {
    (0..SLICES as isize, 0..N as isize, 0..N as isize).prop_map(|(s, i, j)| GridNode::new(s, i, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn change_of_base_point_identities_hold(seed in 0u64..1000, z in node(), w in node(), c in -5.0..5.0f64) {
        let mut m = gpam_model(N, seed);
        m.renorm[0][0] = c;
        let (pz, pw) = (point(&m, z), point(&m, w));
        for s in [Symbol::NOISE, Symbol::LOLLI, Symbol::X, Symbol::XNOISE, Symbol::DUMBBELL] {
            let r = m.cbp_residual(&pz, &pw, s).unwrap();
            prop_assert!(r <= 1e-10, "{} residual {}", s.name(), r);
        }
    }
}
