//! Canned studies. Each returns a table, named checks and resolved constants;
//! persistence is the caller's business.

mod convergence;
mod flow;
mod growth;
mod orderbounds;
mod reconstruction;
mod sensitivity;
mod transport;

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use sspde_core::noise::{estimate_sg_renorm, gpam_renorm_constant, sample_gpam_noise, sample_wiener_noise_realization, wiener_renorm_constant, RegularizationSpec, SgNoiseSpec};
use sspde_core::solver::{NoiseSource, PdeProblem, SolverConfig};
use sspde_core::torus::TorusLattice;
use sspde_core::{GridField, SpaceTimeSeries};

use crate::config::{InitialDatum, NoiseFamily, RunConfig, Setting};

pub use convergence::study_epsilon_convergence;
pub use flow::study_flow;
pub use growth::study_growth;
pub use orderbounds::study_orderbounds;
pub use reconstruction::study_reconstruction;
pub use sensitivity::study_renorm_sensitivity;
pub use transport::study_transport;

pub const STUDIES: [&str; 7] = ["epsilon-convergence", "renorm-sensitivity", "orderbounds", "reconstruction", "growth", "flow", "transport"];

/// One pass/fail line of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: threshold.into(),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub status: String,
}

impl SeedOutcome {
    pub fn ok(seed: u64) -> Self {
        Self { seed, status: "ok".into() }
    }

    pub fn failed(seed: u64, e: impl std::fmt::Display) -> Self {
        Self {
            seed,
            status: format!("failed: {e}"),
        }
    }
}

/// Error for a study whose seeds all failed, quoting the first failure.
pub(crate) fn all_failed(outcomes: &[SeedOutcome]) -> anyhow::Error {
    match outcomes.first() {
        Some(o) => anyhow::anyhow!("every seed failed; seed {} {}", o.seed, o.status),
        None => anyhow::anyhow!("no seeds to run"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub constants: BTreeMap<String, f64>,
    pub outcomes: Vec<SeedOutcome>,
}

impl StudyReport {
    pub fn new(study: &str, header: &[&str]) -> Self {
        Self {
            study: study.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            constants: BTreeMap::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Shortest round-tripping decimal form.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn run_study(cfg: &RunConfig) -> Result<StudyReport> {
    match cfg.study.as_str() {
        "epsilon-convergence" => study_epsilon_convergence(cfg),
        "renorm-sensitivity" => study_renorm_sensitivity(cfg),
        "orderbounds" => study_orderbounds(cfg),
        "reconstruction" => study_reconstruction(cfg),
        "growth" => study_growth(cfg),
        "flow" => study_flow(cfg),
        "transport" => study_transport(cfg),
        other => bail!("unknown study {other:?}; expected one of {}", STUDIES.join(", ")),
    }
}

pub(crate) fn initial_datum(lattice: TorusLattice, u0: InitialDatum) -> GridField {
    match u0 {
        InitialDatum::Zero => GridField::zeros(lattice),
        InitialDatum::Const(a) => GridField::constant(lattice, a),
        InitialDatum::Cos(a) => GridField::from_fn(lattice, |x, _| a * x.cos()),
    }
}

/// Time at which the Sine-Gordon constant is estimated.
pub const SG_RENORM_HORIZON: f64 = 1.0;

/// Renormalization matrix of the configured family at lattice `n`; `auto`
/// resolves to the family's constant.
pub(crate) fn renorm_matrix(cfg: &RunConfig, lattice: TorusLattice, eps: f64) -> Result<Vec<Vec<f64>>> {
    let reg = RegularizationSpec::new(eps)?;
    Ok(match cfg.noise.family {
        NoiseFamily::None => vec![vec![cfg.noise.renorm.or(0.0)]],
        NoiseFamily::Gpam => vec![vec![cfg.noise.renorm.or(gpam_renorm_constant(&reg))]],
        NoiseFamily::Wiener => vec![vec![cfg.noise.renorm.or(wiener_renorm_constant(cfg.noise.delta, &reg))]],
        NoiseFamily::SineGordon => {
            let mut spec = sg_spec(cfg, lattice, eps, u64::MAX)?;
            spec.t_end = spec.t_end.min(SG_RENORM_HORIZON);
            match cfg.noise.renorm {
                Setting::Value(v) => vec![vec![v, 0.0], vec![0.0, v]],
                _ => {
                    let est = estimate_sg_renorm(&spec, cfg.noise.renorm_samples)?;
                    est.c.iter().map(|r| r.to_vec()).collect()
                }
            }
        }
    })
}

pub(crate) fn sg_spec(cfg: &RunConfig, lattice: TorusLattice, eps: f64, seed: u64) -> Result<SgNoiseSpec<f64>> {
    let reg = RegularizationSpec::new(eps)?.with_time_mollifier(eps * eps);
    let spec = SgNoiseSpec {
        lattice,
        beta: cfg.noise.beta,
        reg,
        dt: cfg.solver.dt,
        t_end: cfg.solver.t_end,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// The configured equation for one seed on an n-point lattice with noise at
/// scale ε and the given C.
pub(crate) fn build_problem(cfg: &RunConfig, n: usize, eps: f64, seed: u64, renorm: Vec<Vec<f64>>) -> Result<PdeProblem<f64>> {
    let lattice = TorusLattice::new(n)?;
    let reg = RegularizationSpec::new(eps)?;
    let sigma = cfg.model.sigma.build();
    let u0 = initial_datum(lattice, cfg.model.u0);
    let t_end = cfg.solver.t_end;
    let (sigmas, noise) = match cfg.noise.family {
        NoiseFamily::None => (vec![sigma], NoiseSource::None),
        NoiseFamily::Gpam => {
            let xi = sample_gpam_noise(lattice, reg, seed)?;
            (vec![sigma], NoiseSource::Fields(vec![SpaceTimeSeries::time_constant(xi.field(), 0.0, t_end, 2)]))
        }
        NoiseFamily::Wiener => {
            let steps = (t_end / cfg.solver.dt).round() as usize;
            let w = sample_wiener_noise_realization(lattice, cfg.noise.delta, cfg.solver.dt, steps, reg, seed, 0)?;
            (vec![sigma], NoiseSource::Wiener(w))
        }
        NoiseFamily::SineGordon => {
            let b = cfg.noise.beta;
            let spec = sg_spec(cfg, lattice, eps, seed)?;
            (
                vec![sspde_core::solver::Sigma::Sin(b), sspde_core::solver::Sigma::Cos(b)],
                NoiseSource::SineGordon { spec, realization: 0 },
            )
        }
    };
    Ok(PdeProblem {
        sigmas,
        noise,
        renorm,
        mass: cfg.model.mass,
        u0,
        kappa: cfg.model.kappa,
    })
}

pub(crate) fn solver_config(cfg: &RunConfig, n: usize, seed: u64) -> SolverConfig<f64> {
    SolverConfig {
        n_spatial: n,
        dt: cfg.solver.dt,
        t_start: 0.0,
        t_end: cfg.solver.t_end,
        scheme: cfg.solver.scheme,
        seed,
        save_every: cfg.solver.save_every,
        dealias: cfg.solver.dealias,
    }
}
