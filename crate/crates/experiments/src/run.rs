//! Commands that write artifacts into an output directory.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use sspde_core::calculus::{build_ufield, gamma_seminorm_u, holder_seminorm, PlanSpec, Region};
use sspde_core::model::Model;
use sspde_core::noise::{sample_gpam_noise, RegularizationSpec};
use sspde_core::solver::{solve_renormalized, Trajectory};
use sspde_core::torus::{write_dump, TorusLattice};

use crate::config::{NoiseFamily, RunConfig};
use crate::io::{csv_bytes, sha256_hex, write_atomic};
use crate::manifest::RunManifest;
use crate::studies::{build_problem, num, renorm_matrix, run_study, solver_config, Check, SeedOutcome, StudyReport};

struct Writer<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> Writer<'a> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.manifest.outputs.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let bytes = csv_bytes(&header, rows)?;
        self.put(name, &bytes)
    }

    fn finish(mut self, started: Instant) -> Result<RunManifest> {
        self.manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        let json = self.manifest.to_json()?;
        write_atomic(&self.dir.join("manifest.json"), json.as_bytes())?;
        Ok(self.manifest)
    }
}

fn checks_rows(checks: &[Check]) -> Vec<Vec<String>> {
    checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.value), c.threshold.clone(), if c.pass { "PASS".into() } else { "FAIL".into() }])
        .collect()
}

/// Runs a canned study and writes `<study>.csv`, `checks.csv`, `manifest.json`.
pub fn study(cfg: &RunConfig, out: &Path) -> Result<(StudyReport, RunManifest)> {
    let started = Instant::now();
    let report = run_study(cfg)?;
    let mut w = Writer {
        dir: out,
        manifest: RunManifest::new(&format!("study {}", cfg.study), cfg),
    };
    w.put(&format!("{}.csv", cfg.study), &csv_bytes(&report.header, &report.rows)?)?;
    w.table("checks.csv", &["check", "value", "threshold", "result"], &checks_rows(&report.checks))?;
    w.manifest.constants = report.constants.clone();
    w.manifest.checks = report.checks.clone();
    w.manifest.outcomes = report.outcomes.clone();
    let m = w.finish(started)?;
    Ok((report, m))
}

/// Solves the configured equation per seed; writes `supnorm.csv`,
/// `intervals.csv`, one dump per seed and the manifest.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let n = cfg.solver.n_spatial;
    let lattice = TorusLattice::new(n)?;
    let eps = cfg.epsilon();
    let c = renorm_matrix(cfg, lattice, eps)?;
    let runs: Vec<(u64, Result<Trajectory<f64>>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = build_problem(cfg, n, eps, seed, c.clone()).and_then(|p| Ok(solve_renormalized(&p, &solver_config(cfg, n, seed))?));
            (seed, r)
        })
        .collect();
    let mut w = Writer {
        dir: out,
        manifest: RunManifest::new("solve", cfg),
    };
    for (a, row) in c.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            w.manifest.constants.insert(format!("c_{a}{b}"), *v);
        }
    }
    w.manifest.constants.insert("epsilon".into(), eps);
    let mut sup_rows = Vec::new();
    let mut int_rows = Vec::new();
    for (seed, r) in &runs {
        match r {
            Ok(traj) => {
                for (t, s) in &traj.sup_series {
                    sup_rows.push(vec![seed.to_string(), num(*t), num(*s)]);
                }
                for (i, y) in traj.intervals.iter().enumerate() {
                    int_rows.push(vec![seed.to_string(), (i + 1).to_string(), num(*y)]);
                }
                if let Some(field) = &traj.field {
                    let mut bytes = Vec::new();
                    write_dump(field, &mut bytes)?;
                    w.put(&format!("u_seed{seed}.bin"), &bytes)?;
                }
                w.manifest.outcomes.push(SeedOutcome::ok(*seed));
            }
            Err(e) => w.manifest.outcomes.push(SeedOutcome::failed(*seed, e)),
        }
    }
    w.table("supnorm.csv", &["seed", "t", "sup_norm"], &sup_rows)?;
    w.table("intervals.csv", &["seed", "n", "y_n"], &int_rows)?;
    w.finish(started)
}

/// Hölder semi-norm of u and the γ-semi-norm of U per seed on [t_end/2, t_end]
/// for the gpam family.
pub fn norms(cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    anyhow::ensure!(cfg.noise.family == NoiseFamily::Gpam, "norms are computed for the gpam family");
    let n = cfg.solver.n_spatial;
    let lattice = TorusLattice::new(n)?;
    let eps = cfg.epsilon();
    let c = renorm_matrix(cfg, lattice, eps)?;
    let alpha = 1.0 - cfg.model.kappa;
    let gamma = 2.0 - 2.0 * cfg.model.kappa;
    let rows: Vec<(u64, Result<(f64, f64)>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = (|| -> Result<(f64, f64)> {
                let p = build_problem(cfg, n, eps, seed, c.clone())?;
                let mut sc = solver_config(cfg, n, seed);
                sc.save_every = sc.save_every.max(1);
                let traj = solve_renormalized(&p, &sc)?;
                let u = traj.series().context("no stored slices")?;
                let f = u.to_field();
                let region = Region::window(cfg.solver.t_end / 2.0, cfg.solver.t_end);
                let spec = PlanSpec {
                    basepoints: cfg.analysis.basepoints,
                    pair_cap: cfg.analysis.pair_cap,
                    seed,
                    dense: false,
                };
                let holder = holder_seminorm(&u, alpha, region, spec)?.value;
                let noise = sample_gpam_noise(lattice, RegularizationSpec::new(eps)?, seed)?;
                let model = Model::gpam(&noise, f.t0(), f.dt(), f.len(), cfg.model.kappa)?;
                let uf = build_ufield(u, &model, cfg.model.sigma.build())?;
                let g = gamma_seminorm_u(&uf, gamma, region, spec)?.value;
                Ok((holder, g))
            })();
            (seed, r)
        })
        .collect();
    let mut w = Writer {
        dir: out,
        manifest: RunManifest::new("norms", cfg),
    };
    let mut table = Vec::new();
    for (seed, r) in rows {
        match r {
            Ok((hn, gn)) => {
                table.push(vec![seed.to_string(), num(alpha), num(hn), num(gamma), num(gn)]);
                w.manifest.outcomes.push(SeedOutcome::ok(seed));
            }
            Err(e) => w.manifest.outcomes.push(SeedOutcome::failed(seed, e)),
        }
    }
    w.table("norms.csv", &["seed", "alpha", "holder_u", "gamma", "gamma_seminorm_u"], &table)?;
    w.finish(started)
}
