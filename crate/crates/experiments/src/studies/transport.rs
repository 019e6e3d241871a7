use anyhow::Result;
use sspde_core::solver::{max_principle_check, solve_transport_grid, solve_transport_mc, McConfig, Scheme, SolverConfig};
use sspde_core::torus::TorusLattice;
use sspde_core::{GridField, SpaceTimeSeries};

use super::{num, Check, StudyReport};
use crate::config::RunConfig;

/// Standard errors allowed between the Monte Carlo and grid values.
pub const SE_FACTOR: f64 = 3.0;
/// Euler–Maruyama step of the path simulation.
pub const PATH_STEP: f64 = 2e-3;

/// Feynman–Kac estimates at probe points against the grid transport solve
/// for b = (sin x₂, sin x₁), f = cos(x₁ + x₂)/2, v_{T₁} = cos x₁ on [0, t_end].
pub fn study_transport(cfg: &RunConfig) -> Result<StudyReport> {
    let n = cfg.solver.n_spatial;
    let lattice = TorusLattice::new(n)?;
    let t_end = cfg.solver.t_end;
    let mass = cfg.model.mass;
    let steady = |g: GridField| SpaceTimeSeries::time_constant(g, 0.0, t_end, 2);
    let b = [
        steady(GridField::from_fn(lattice, |_, y| y.sin())),
        steady(GridField::from_fn(lattice, |x, _| x.sin())),
    ];
    let f = steady(GridField::from_fn(lattice, |x, y| 0.5 * (x + y).cos()));
    let v0 = GridField::from_fn(lattice, |x, _| x.cos());
    let sc = SolverConfig {
        n_spatial: n,
        dt: cfg.solver.dt,
        t_start: 0.0,
        t_end,
        scheme: Scheme::ExponentialRk4,
        seed: 0,
        save_every: 0,
        dealias: false,
    };
    let grid = solve_transport_grid(&b, &f, &v0, mass, &sc)?;
    let mp = max_principle_check(&grid, &f);
    let zero = [steady(GridField::zeros(lattice)), steady(GridField::zeros(lattice))];
    let grid_free = solve_transport_grid(&zero, &f, &v0, mass, &sc)?;
    let mp_free = max_principle_check(&grid_free, &f);

    let mut report = StudyReport::new("transport", &["probe", "x1", "x2", "grid", "mc", "standard_error", "z_score"]);
    report.constants.insert("max_principle_sup".into(), mp.sup);
    report.constants.insert("max_principle_bound".into(), mp.bound);
    let probes = cfg.analysis.probes.max(1);
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let mut worst = 0.0f64;
    for p in 0..probes {
        let i = (p * n) / probes;
        let j = ((p * 3 + 1) * n / probes) % n;
        let x = [lattice.coordinate(i), lattice.coordinate(j)];
        let mc = McConfig {
            n_paths: cfg.analysis.paths,
            ds: PATH_STEP,
            seed: seed.wrapping_add(p as u64),
        };
        let est = solve_transport_mc(&b, &f, &v0, mass, 0.0, t_end, x, &mc)?;
        let g = grid.final_field().get(i, j);
        let z = (est.estimate - g).abs() / est.standard_error;
        worst = worst.max(z);
        report.row(vec![p.to_string(), num(x[0]), num(x[1]), num(g), num(est.estimate), num(est.standard_error), num(z)]);
    }
    report.constants.insert("worst_z".into(), worst);
    report.checks.push(Check::new("Monte Carlo agrees with grid", worst, format!("<= {SE_FACTOR} SE at every probe"), worst <= SE_FACTOR));
    report.checks.push(Check::new("maximum principle", mp.sup / mp.bound, "sup <= bound on every run", mp.holds && mp_free.holds));
    Ok(report)
}
