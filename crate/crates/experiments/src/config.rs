//! Run configuration as flat `section.key = value` text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sspde_core::solver::{Scheme, Sigma};

/// Nonlinearity as written in a config: `zero`, `sin:β`, `cos:β`,
/// `linear:a`, `constant:c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "param")]
pub enum SigmaSpec {
    Zero,
    Sin(f64),
    Cos(f64),
    Linear(f64),
    Constant(f64),
}

impl SigmaSpec {
    pub fn build(self) -> Sigma<f64> {
        match self {
            Self::Zero => Sigma::Zero,
            Self::Sin(b) => Sigma::Sin(b),
            Self::Cos(b) => Sigma::Cos(b),
            Self::Linear(a) => Sigma::Linear(a),
            Self::Constant(c) => Sigma::Constant(c),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let (kind, param) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), Some(p.trim().parse::<f64>().with_context(|| format!("sigma parameter in {s:?}"))?)),
            None => (s.trim(), None),
        };
        let p = param.unwrap_or(1.0);
        Ok(match kind {
            "zero" => Self::Zero,
            "sin" => Self::Sin(p),
            "cos" => Self::Cos(p),
            "linear" => Self::Linear(p),
            "constant" => Self::Constant(p),
            other => bail!("unknown sigma {other:?}"),
        })
    }

    fn render(self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Sin(p) => format!("sin:{p:?}"),
            Self::Cos(p) => format!("cos:{p:?}"),
            Self::Linear(p) => format!("linear:{p:?}"),
            Self::Constant(p) => format!("constant:{p:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    None,
    Gpam,
    SineGordon,
    Wiener,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Gpam => "gpam",
            Self::SineGordon => "sine-gordon",
            Self::Wiener => "wiener",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Self::None,
            "gpam" => Self::Gpam,
            "sine-gordon" => Self::SineGordon,
            "wiener" => Self::Wiener,
            other => bail!("unknown noise family {other:?}"),
        })
    }
}

/// Initial datum: `zero`, `const:a`, `cos:a` (a·cos x₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "param")]
pub enum InitialDatum {
    Zero,
    Const(f64),
    Cos(f64),
}

impl InitialDatum {
    fn parse(s: &str) -> Result<Self> {
        let (kind, p) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim().parse::<f64>().with_context(|| format!("initial datum {s:?}"))?),
            None => (s.trim(), 1.0),
        };
        Ok(match kind {
            "zero" => Self::Zero,
            "const" => Self::Const(p),
            "cos" => Self::Cos(p),
            other => bail!("unknown initial datum {other:?}"),
        })
    }

    fn render(self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Const(a) => format!("const:{a:?}"),
            Self::Cos(a) => format!("cos:{a:?}"),
        }
    }
}

/// `auto` picks the family's constant at the configured ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Auto,
    Value(f64),
}

impl Setting {
    fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(Self::Auto)
        } else {
            Ok(Self::Value(s.parse().with_context(|| format!("expected auto or a number, got {s:?}"))?))
        }
    }

    fn render(self) -> String {
        match self {
            Self::Auto => "auto".into(),
            Self::Value(v) => format!("{v:?}"),
        }
    }

    pub fn or(self, auto: f64) -> f64 {
        match self {
            Self::Auto => auto,
            Self::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBlock {
    pub family: NoiseFamily,
    /// Defaults to 3/n_spatial.
    pub epsilon: Setting,
    pub beta: f64,
    pub delta: f64,
    /// Renormalization constant C.
    pub renorm: Setting,
    /// Samples behind the Sine-Gordon estimate.
    pub renorm_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverBlock {
    pub n_spatial: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub save_every: usize,
    pub dealias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub sigma: SigmaSpec,
    pub mass: f64,
    pub kappa: f64,
    pub u0: InitialDatum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBlock {
    pub scales: Vec<f64>,
    pub basepoints: usize,
    pub pair_cap: Option<usize>,
    pub levels: Vec<usize>,
    pub paths: usize,
    pub probes: usize,
    /// δ of the exponent set.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub study: String,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub noise: NoiseBlock,
    pub solver: SolverBlock,
    pub model: ModelBlock,
    pub analysis: AnalysisBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            study: "solve".into(),
            seeds: (1..=8).collect(),
            output: PathBuf::from("out"),
            noise: NoiseBlock {
                family: NoiseFamily::Gpam,
                epsilon: Setting::Auto,
                beta: 1.0,
                delta: 0.5,
                renorm: Setting::Auto,
                renorm_samples: 100,
            },
            solver: SolverBlock {
                n_spatial: 64,
                dt: 2.5e-4,
                t_end: 1.0,
                scheme: Scheme::ExponentialRk4,
                save_every: 40,
                dealias: true,
            },
            model: ModelBlock {
                sigma: SigmaSpec::Sin(1.0),
                mass: 0.0,
                kappa: sspde_core::bounds::DEFAULT_KAPPA,
                u0: InitialDatum::Zero,
            },
            analysis: AnalysisBlock {
                scales: vec![0.25, 0.125, 0.0625, 0.03125],
                basepoints: 32,
                pair_cap: None,
                levels: vec![32, 64, 128],
                paths: 10_000,
                probes: 8,
                delta: sspde_core::bounds::DEFAULT_DELTA,
            },
        }
    }
}

fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| anyhow!("{e} in list {s:?}"))).collect()
}

fn render_list<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("expected a boolean, got {s:?}"),
    }
}

impl RunConfig {
    /// Keys absent from `text` keep their defaults; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            c.set(key.trim(), value.trim()).with_context(|| format!("line {}", lineno + 1))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "study" => self.study = v.to_string(),
            "seeds" => self.seeds = list(v)?,
            "output" => self.output = PathBuf::from(v),
            "noise.family" => self.noise.family = NoiseFamily::parse(v)?,
            "noise.epsilon" => self.noise.epsilon = Setting::parse(v)?,
            "noise.beta" => self.noise.beta = v.parse()?,
            "noise.delta" => self.noise.delta = v.parse()?,
            "noise.renorm" => self.noise.renorm = Setting::parse(v)?,
            "noise.renorm_samples" => self.noise.renorm_samples = v.parse()?,
            "solver.n_spatial" => self.solver.n_spatial = v.parse()?,
            "solver.dt" => self.solver.dt = v.parse()?,
            "solver.t_end" => self.solver.t_end = v.parse()?,
            "solver.scheme" => self.solver.scheme = Scheme::parse(v).ok_or_else(|| anyhow!("unknown scheme {v:?}"))?,
            "solver.save_every" => self.solver.save_every = v.parse()?,
            "solver.dealias" => self.solver.dealias = parse_bool(v)?,
            "model.sigma" => self.model.sigma = SigmaSpec::parse(v)?,
            "model.mass" => self.model.mass = v.parse()?,
            "model.kappa" => self.model.kappa = v.parse()?,
            "model.u0" => self.model.u0 = InitialDatum::parse(v)?,
            "analysis.scales" => self.analysis.scales = list(v)?,
            "analysis.basepoints" => self.analysis.basepoints = v.parse()?,
            "analysis.pair_cap" => self.analysis.pair_cap = if v == "none" { None } else { Some(v.parse()?) },
            "analysis.levels" => self.analysis.levels = list(v)?,
            "analysis.paths" => self.analysis.paths = v.parse()?,
            "analysis.probes" => self.analysis.probes = v.parse()?,
            "analysis.delta" => self.analysis.delta = v.parse()?,
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    /// Every key, in the order `parse` accepts; `parse(render())` is the identity.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("study", self.study.clone());
        kv("seeds", render_list(&self.seeds));
        kv("output", self.output.display().to_string());
        kv("noise.family", self.noise.family.name().into());
        kv("noise.epsilon", self.noise.epsilon.render());
        kv("noise.beta", format!("{:?}", self.noise.beta));
        kv("noise.delta", format!("{:?}", self.noise.delta));
        kv("noise.renorm", self.noise.renorm.render());
        kv("noise.renorm_samples", self.noise.renorm_samples.to_string());
        kv("solver.n_spatial", self.solver.n_spatial.to_string());
        kv("solver.dt", format!("{:?}", self.solver.dt));
        kv("solver.t_end", format!("{:?}", self.solver.t_end));
        kv("solver.scheme", self.solver.scheme.name().into());
        kv("solver.save_every", self.solver.save_every.to_string());
        kv("solver.dealias", self.solver.dealias.to_string());
        kv("model.sigma", self.model.sigma.render());
        kv("model.mass", format!("{:?}", self.model.mass));
        kv("model.kappa", format!("{:?}", self.model.kappa));
        kv("model.u0", self.model.u0.render());
        kv("analysis.scales", render_list(&self.analysis.scales));
        kv("analysis.basepoints", self.analysis.basepoints.to_string());
        kv("analysis.pair_cap", self.analysis.pair_cap.map_or("none".into(), |c| c.to_string()));
        kv("analysis.levels", render_list(&self.analysis.levels));
        kv("analysis.paths", self.analysis.paths.to_string());
        kv("analysis.probes", self.analysis.probes.to_string());
        kv("analysis.delta", format!("{:?}", self.analysis.delta));
        s
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        sspde_core::torus::TorusLattice::new(s.n_spatial).map_err(|e| anyhow!("solver.n_spatial: {e}"))?;
        if !(s.dt > 0.0 && s.t_end >= s.dt) {
            bail!("need 0 < solver.dt ≤ solver.t_end");
        }
        if !(self.model.kappa > 0.0 && self.model.kappa < 1.0 / 3.0) {
            bail!("model.kappa must lie in (0, 1/3)");
        }
        if self.model.mass < 0.0 {
            bail!("model.mass must be non-negative");
        }
        if !(self.noise.delta > 0.0 && self.noise.delta < 1.0) {
            bail!("noise.delta must lie in (0, 1)");
        }
        if let Setting::Value(e) = self.noise.epsilon {
            if !(e > 0.0) {
                bail!("noise.epsilon must be positive");
            }
        }
        if self.seeds.is_empty() {
            bail!("need at least one seed");
        }
        if self.analysis.scales.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            bail!("analysis.scales must lie in (0, 1)");
        }
        Ok(())
    }

    /// Keys and values as a sorted map, for the manifest echo.
    pub fn as_map(&self) -> BTreeMap<String, String> {
        self.render()
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect()
    }

    /// ε of the configured lattice.
    pub fn epsilon(&self) -> f64 {
        self.noise.epsilon.or(3.0 / self.solver.n_spatial as f64)
    }
}
