use anyhow::{bail, Result};
use rayon::prelude::*;
use sspde_core::bounds::{exponents, growth_audit, windowed_mean_ratio, IntervalConstants};
use sspde_core::calculus::{interval_order_bounds, kernel_set, OrderBoundSpec, PlanSpec};
use sspde_core::model::Model;
use sspde_core::noise::{sample_gpam_noise, RegularizationSpec};
use sspde_core::solver::{solve_renormalized, SolverConfig};
use sspde_core::torus::TorusLattice;

use super::{all_failed, build_problem, num, renorm_matrix, solver_config, Check, SeedOutcome, StudyReport};
use crate::config::{NoiseFamily, RunConfig};

/// Allowed relative change of the windowed mean in the massive case.
pub const STABILIZATION_TOLERANCE: f64 = 0.2;

/// C₁ₙ, C₂ₙ of the gPAM model on each unit interval of [0, n_int].
fn gpam_interval_constants(cfg: &RunConfig, seed: u64, n_int: usize) -> Result<IntervalConstants<f64>> {
    let lattice = TorusLattice::new(cfg.solver.n_spatial)?;
    let reg = RegularizationSpec::new(cfg.epsilon())?;
    let noise = sample_gpam_noise(lattice, reg, seed)?;
    let l_min = cfg.analysis.scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let l_max = cfg.analysis.scales.iter().cloned().fold(0.0, f64::max);
    let dt = l_min * l_min / 4.0;
    let slices = (n_int as f64 / dt).ceil() as usize + 1;
    let model = Model::gpam(&noise, 0.0, dt, slices, cfg.model.kappa)?;
    let mut c = IntervalConstants { c1: Vec::new(), c2: Vec::new() };
    for k in 0..n_int {
        let spec = OrderBoundSpec {
            t_min: k as f64 + l_max * l_max,
            t_max: (k + 1) as f64,
            scales: cfg.analysis.scales.clone(),
            kernels: kernel_set(),
            plan: PlanSpec {
                basepoints: cfg.analysis.basepoints,
                pair_cap: cfg.analysis.pair_cap,
                seed: seed.wrapping_add(k as u64),
                dense: false,
            },
        };
        let ob = interval_order_bounds(&model, &spec)?;
        c.c1.push(ob.c1);
        c.c2.push(ob.c2);
    }
    Ok(c)
}

struct SeedGrowth {
    y: Vec<f64>,
    envelope: Vec<f64>,
    pass: bool,
}

/// Y_n over [0, t_end] per seed. Massless gPAM runs are audited against the
/// fitted polynomial envelope; massive runs against windowed-mean
/// stabilization of the ensemble mean.
pub fn study_growth(cfg: &RunConfig) -> Result<StudyReport> {
    let n = cfg.solver.n_spatial;
    let lattice = TorusLattice::new(n)?;
    let eps = cfg.epsilon();
    let c = renorm_matrix(cfg, lattice, eps)?;
    let massive = cfg.model.mass > 0.0;
    if !massive && cfg.noise.family != NoiseFamily::Gpam && cfg.noise.family != NoiseFamily::None {
        bail!("the massless growth audit runs on the gpam family");
    }
    let ex = exponents(cfg.model.kappa, cfg.analysis.delta)?;
    let mut report = StudyReport::new("growth", &["seed", "n", "y_n", "envelope", "pass"]);
    report.constants.insert("beta1".into(), ex.beta1);
    report.constants.insert("beta2".into(), ex.beta2);
    report.constants.insert("kappa_bar".into(), ex.kappa_bar);
    for (a, row) in c.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            report.constants.insert(format!("c_{a}{b}"), *v);
        }
    }
    let runs: Vec<(u64, Result<SeedGrowth>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = (|| -> Result<SeedGrowth> {
                let p = build_problem(cfg, n, eps, seed, c.clone())?;
                let traj = solve_renormalized(&p, &SolverConfig { save_every: 0, ..solver_config(cfg, n, seed) })?;
                let y = traj.intervals.clone();
                if massive || cfg.noise.family == NoiseFamily::None {
                    return Ok(SeedGrowth {
                        envelope: vec![f64::NAN; y.len()],
                        pass: true,
                        y,
                    });
                }
                let consts = gpam_interval_constants(cfg, seed, y.len())?;
                let rows = growth_audit(&y, &consts, &ex)?;
                Ok(SeedGrowth {
                    envelope: rows.iter().map(|r| r.envelope).collect(),
                    pass: rows.iter().all(|r| r.pass),
                    y,
                })
            })();
            (seed, r)
        })
        .collect();
    let mut all_pass = true;
    let mut ys: Vec<Vec<f64>> = Vec::new();
    for (seed, r) in runs {
        match r {
            Ok(g) => {
                for (i, y) in g.y.iter().enumerate() {
                    report.row(vec![seed.to_string(), (i + 1).to_string(), num(*y), num(g.envelope[i]), g.pass.to_string()]);
                }
                all_pass &= g.pass;
                ys.push(g.y);
                report.outcomes.push(SeedOutcome::ok(seed));
            }
            Err(e) => {
                all_pass = false;
                report.outcomes.push(SeedOutcome::failed(seed, e));
            }
        }
    }
    if ys.is_empty() {
        return Err(all_failed(&report.outcomes));
    }
    if massive {
        let len = ys.iter().map(|y| y.len()).min().unwrap_or(0);
        let mean: Vec<f64> = (0..len).map(|i| ys.iter().map(|y| y[i]).sum::<f64>() / ys.len() as f64).collect();
        let ratio = windowed_mean_ratio(&mean, 5..=7, 8..=10).unwrap_or(f64::NAN);
        report.constants.insert("windowed_mean_ratio".into(), ratio);
        report.checks.push(Check::new(
            "windowed mean stabilizes",
            ratio,
            format!("|ratio - 1| <= {STABILIZATION_TOLERANCE}"),
            (ratio - 1.0).abs() <= STABILIZATION_TOLERANCE,
        ));
    } else {
        report.checks.push(Check::new("Y_n under fitted envelope", all_pass as u8 as f64, "every n, every seed", all_pass));
    }
    Ok(report)
}
