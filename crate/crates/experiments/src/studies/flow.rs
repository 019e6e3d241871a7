use anyhow::{bail, Result};
use rayon::prelude::*;
use sspde_core::solver::flow_composition_check;

use super::{build_problem, num, renorm_matrix, solver_config, Check, SeedOutcome, StudyReport};
use crate::config::{NoiseFamily, RunConfig};
use sspde_core::torus::TorusLattice;

pub const RESTART_TOLERANCE: f64 = 1e-8;

/// Restart identity u(t; r, u(r; s, v)) = u(t; s, v) with shared Wiener
/// increments, and the same restart under the next seed's noise as control.
pub fn study_flow(cfg: &RunConfig) -> Result<StudyReport> {
    if cfg.noise.family != NoiseFamily::Wiener {
        bail!("the flow study runs on the wiener family");
    }
    let n = cfg.solver.n_spatial;
    let eps = cfg.epsilon();
    let c = renorm_matrix(cfg, TorusLattice::new(n)?, eps)?;
    let dt = cfg.solver.dt;
    let steps = (cfg.solver.t_end / dt).round() as usize;
    if steps < 3 {
        bail!("need at least three steps");
    }
    let times = [0.0, (steps / 3) as f64 * dt, steps as f64 * dt];
    let mut report = StudyReport::new("flow", &["seed", "s", "r", "t", "difference", "control_difference"]);
    report.constants.insert("c_eps".into(), c[0][0]);
    let runs: Vec<(u64, Result<(f64, f64)>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = (|| -> Result<(f64, f64)> {
                let p = build_problem(cfg, n, eps, seed, c.clone())?;
                let q = build_problem(cfg, n, eps, seed.wrapping_add(1_000_003), c.clone())?;
                let rep = flow_composition_check(&p, Some(&q), &solver_config(cfg, n, seed), times)?;
                Ok((rep.difference, rep.control_difference.unwrap_or(f64::NAN)))
            })();
            (seed, r)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut weakest_control = f64::INFINITY;
    let mut ok = true;
    for (seed, r) in runs {
        match r {
            Ok((d, cd)) => {
                report.row(vec![seed.to_string(), num(times[0]), num(times[1]), num(times[2]), num(d), num(cd)]);
                worst = worst.max(d);
                weakest_control = weakest_control.min(cd);
                report.outcomes.push(SeedOutcome::ok(seed));
            }
            Err(e) => {
                ok = false;
                report.outcomes.push(SeedOutcome::failed(seed, e));
            }
        }
    }
    report.checks.push(Check::new("restart identity", worst, format!("<= {RESTART_TOLERANCE:e}"), ok && worst <= RESTART_TOLERANCE));
    report.checks.push(Check::new("different noise separates", weakest_control, "> 1e-3", weakest_control > 1e-3));
    Ok(report)
}
