use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sspde_core::bounds::{apriori_bound, exponents, l_tilde, t_window};
use sspde_experiments::config::RunConfig;
use sspde_experiments::manifest::RunManifest;
use sspde_experiments::run;

#[derive(Parser)]
#[command(name = "sspde", version, about = "Simulate and audit renormalized singular SPDEs on the 2-torus")]
struct Cli {
    /// Worker threads; falls back to SSPDE_THREADS, then to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config, or a manifest.json to re-run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds; overrides `seeds` in the config.
    #[arg(long)]
    seeds: Option<String>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured equation for every seed.
    Solve(RunArgs),
    /// Exponents and a priori bound values as JSON.
    Bounds {
        #[arg(long, default_value_t = sspde_core::bounds::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long, default_value_t = sspde_core::bounds::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        u0norm: f64,
        #[arg(long, default_value_t = 0.0)]
        mass: f64,
    },
    /// Hölder and γ semi-norms of solved trajectories.
    Norms(RunArgs),
    /// The reconstruction scaling study.
    Reconstruct(RunArgs),
    /// One of the canned studies.
    Study {
        name: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn load(args: &RunArgs, study: Option<&str>) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(p) if p.extension().is_some_and(|e| e == "json") => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunManifest::from_json(&text)?.rerun_config()?
        }
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = study {
        cfg.study = s.to_string();
    }
    if let Some(s) = &args.seeds {
        cfg.set("seeds", s)?;
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    let out = cfg.output.clone();
    Ok((cfg, out))
}

fn print_manifest(m: &RunManifest, out: &Path) {
    for c in &m.checks {
        println!("{} {}: {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    for o in m.outcomes.iter().filter(|o| o.status != "ok") {
        eprintln!("seed {}: {}", o.seed, o.status);
    }
    println!("wrote {} files to {}", m.outputs.len() + 1, out.display());
}

fn threads(cli: Option<usize>) -> Result<Option<usize>> {
    if cli.is_some() {
        return Ok(cli);
    }
    match std::env::var("SSPDE_THREADS") {
        Ok(v) => Ok(Some(v.parse().with_context(|| format!("SSPDE_THREADS={v:?}"))?)),
        Err(_) => Ok(None),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = threads(cli.threads)? {
        if t == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Solve(a) => {
            let (cfg, out) = load(&a, None)?;
            print_manifest(&run::solve(&cfg, &out)?, &out);
        }
        Command::Norms(a) => {
            let (cfg, out) = load(&a, None)?;
            print_manifest(&run::norms(&cfg, &out)?, &out);
        }
        Command::Reconstruct(a) => {
            let (cfg, out) = load(&a, Some("reconstruction"))?;
            print_manifest(&run::study(&cfg, &out)?.1, &out);
        }
        Command::Study { name, args } => {
            let (cfg, out) = load(&args, Some(&name))?;
            let (report, m) = run::study(&cfg, &out)?;
            print_manifest(&m, &out);
            if !report.passed() {
                std::process::exit(2);
            }
        }
        Command::Bounds { kappa, delta, c1, c2, u0norm, mass } => {
            let ex = exponents(kappa, delta)?;
            let c_star = c1.max(c2);
            let gamma = 2.0 - 2.0 * kappa;
            let lt = l_tilde(c_star, c1, c2, kappa, delta, mass);
            let bound = apriori_bound(u0norm, c1, c2, kappa, delta).ok();
            let out = json!({
                "exponents": ex,
                "e_gamma": ex.e_gamma(gamma),
                "t_window": t_window(gamma, kappa, c1, c2, c_star, mass),
                "l_tilde": lt,
                "apriori_bound": bound,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}
