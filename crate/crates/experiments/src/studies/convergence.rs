use anyhow::{bail, Result};
use rayon::prelude::*;
use sspde_core::solver::solve_renormalized;
use sspde_core::stats::median;
use sspde_core::torus::TorusLattice;
use sspde_core::GridField;

use super::{build_problem, num, renorm_matrix, solver_config, Check, SeedOutcome, StudyReport};
use crate::config::RunConfig;

/// Final state per level restricted to the coarsest lattice.
fn ladder(cfg: &RunConfig, seed: u64, levels: &[usize], renormalized: bool) -> Result<Vec<GridField>> {
    let coarse = TorusLattice::new(levels[0])?;
    levels
        .iter()
        .map(|&n| {
            let lattice = TorusLattice::new(n)?;
            let eps = 3.0 / n as f64;
            let c = if renormalized { renorm_matrix(cfg, lattice, eps)? } else { vec![vec![0.0]] };
            let p = build_problem(cfg, n, eps, seed, c)?;
            let sc = sspde_core::solver::SolverConfig {
                save_every: 0,
                ..solver_config(cfg, n, seed)
            };
            let traj = solve_renormalized(&p, &sc)?;
            Ok(traj.final_field().restrict(coarse)?)
        })
        .collect()
}

fn differences(fields: &[GridField]) -> Vec<f64> {
    fields.windows(2).map(|w| w[0].max_abs_diff(&w[1])).collect()
}

/// D_ℓ = ‖u^{(ε_ℓ)} − u^{(ε_{ℓ+1})}‖∞ on the coarsest lattice at t_end, with
/// the level's own C^(ε) and with C = 0.
pub fn study_epsilon_convergence(cfg: &RunConfig) -> Result<StudyReport> {
    let mut levels = cfg.analysis.levels.clone();
    levels.sort_unstable();
    if levels.len() < 3 {
        bail!("need at least three levels");
    }
    let mut report = StudyReport::new("epsilon-convergence", &["seed", "variant", "level", "n_fine", "difference"]);
    for &n in &levels {
        let lattice = TorusLattice::new(n)?;
        let c = renorm_matrix(cfg, lattice, 3.0 / n as f64)?;
        report.constants.insert(format!("c_eps_n{n}"), c[0][0]);
    }
    let runs: Vec<(u64, Result<Vec<f64>>, Result<Vec<f64>>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let renorm = ladder(cfg, seed, &levels, true).map(|f| differences(&f));
            let control = ladder(cfg, seed, &levels, false).map(|f| differences(&f));
            (seed, renorm, control)
        })
        .collect();
    let n_diff = levels.len() - 1;
    let mut renorm_cols = vec![Vec::new(); n_diff];
    let mut control_cols = vec![Vec::new(); n_diff];
    let mut control_blowups = 0usize;
    for (seed, renorm, control) in runs {
        match &renorm {
            Ok(d) => {
                for (l, &v) in d.iter().enumerate() {
                    renorm_cols[l].push(v);
                    report.row(vec![seed.to_string(), "renormalized".into(), (l + 1).to_string(), levels[l + 1].to_string(), num(v)]);
                }
                report.outcomes.push(SeedOutcome::ok(seed));
            }
            Err(e) => report.outcomes.push(SeedOutcome::failed(seed, e)),
        }
        match &control {
            Ok(d) => {
                for (l, &v) in d.iter().enumerate() {
                    control_cols[l].push(v);
                    report.row(vec![seed.to_string(), "control".into(), (l + 1).to_string(), levels[l + 1].to_string(), num(v)]);
                }
            }
            Err(e) => {
                control_blowups += 1;
                report.row(vec![seed.to_string(), "control".into(), "-".into(), "-".into(), format!("failed: {e}")]);
            }
        }
    }
    if renorm_cols[0].is_empty() {
        bail!("every renormalized run failed");
    }
    let med: Vec<f64> = renorm_cols.iter().map(|c| median(c)).collect();
    for (l, m) in med.iter().enumerate() {
        report.constants.insert(format!("median_d{}", l + 1), *m);
    }
    let decreasing = med.windows(2).all(|w| w[1] < w[0]);
    report.checks.push(Check::new(
        "renormalized median differences strictly decrease",
        med[n_diff - 1] / med[0],
        "D_{l+1} < D_l",
        decreasing,
    ));
    let control_ok = if control_blowups > 0 {
        true
    } else {
        let cmed: Vec<f64> = control_cols.iter().map(|c| median(c)).collect();
        for (l, m) in cmed.iter().enumerate() {
            report.constants.insert(format!("control_median_d{}", l + 1), *m);
        }
        cmed.windows(2).all(|w| w[1] >= w[0])
    };
    report.constants.insert("control_blowups".into(), control_blowups as f64);
    report.checks.push(Check::new("control does not converge", control_blowups as f64, "non-decreasing or blow-up", control_ok));
    Ok(report)
}
