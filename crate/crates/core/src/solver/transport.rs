//! (∂_t − Δ + m²)v = b·∇v + f on a grid and by Feynman–Kac Monte Carlo, plus
//! the restart identity of the Wiener flow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::Integrator;
use super::problem::{solve_renormalized, NoiseSource, PdeProblem, Recorder, SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::noise::rng::{self, Purpose};
use crate::scalar::Real;
use crate::torus::{GridField, SpaceTimeSeries, TorusLattice};

fn check_lattice(expected: TorusLattice, found: TorusLattice) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LatticeMismatch {
            expected: expected.n(),
            found: found.n(),
        })
    }
}

/// Grid solve of the transport equation from `config.t_start`; mass enters the
/// linear part.
pub fn solve_transport_grid<T: Real>(
    b: &[SpaceTimeSeries<T>; 2],
    f: &SpaceTimeSeries<T>,
    v0: &GridField<T>,
    mass: T,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    config.validate()?;
    let lattice = config.lattice()?;
    check_lattice(lattice, v0.lattice())?;
    check_lattice(lattice, f.lattice())?;
    b.iter().try_for_each(|c| check_lattice(lattice, c.lattice()))?;
    let integ = Integrator::new(lattice, config.dt, mass, config.dealias);
    let fft = integ.fft();
    let mut v = fft.forward(v0)?;
    let mut rec = Recorder::new(config.t_start, v0, config.save_every);
    let mut last = v0.clone();
    for step in 1..=config.n_steps() {
        let t = config.t_start + config.dt * T::from_usize_lossy(step - 1);
        last = integ.step(config.scheme, &mut v, &last, |_, spec, theta| {
            let ts = t + theta * config.dt;
            let g0 = fft.derivative(spec, 0)?;
            let g1 = fft.derivative(spec, 1)?;
            let b0 = b[0].slice_at_time(ts);
            let b1 = b[1].slice_at_time(ts);
            let fs = f.slice_at_time(ts);
            let vals = (0..lattice.len())
                .map(|idx| b0.values()[idx] * g0.values()[idx] + b1.values()[idx] * g1.values()[idx] + fs.values()[idx])
                .collect();
            integ.transform(&GridField::from_values(lattice, vals)?)
        })?;
        rec.record(step, t + config.dt, &last)?;
    }
    rec.finish(config.scheme, config.dt, config.t_start, config.seed, Vec::new(), last)
}

/// ‖v‖ over the run against ‖v_{T₁}‖ + (T⋆ − T₁)‖f‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MaxPrincipleReport<T: Real> {
    pub sup: T,
    pub bound: T,
    pub holds: bool,
}

pub fn max_principle_check<T: Real>(traj: &Trajectory<T>, f: &SpaceTimeSeries<T>) -> MaxPrincipleReport<T> {
    let t1 = traj.t_start;
    let t_star = traj.t_end();
    let v1 = traj.sup_series.first().map(|p| p.1).unwrap_or(T::zero());
    let f_sup = (0..f.n_slices())
        .filter(|&s| f.time(s) >= t1 - traj.dt && f.time(s) <= t_star + traj.dt)
        .map(|s| f.slice(s).sup_norm())
        .fold(T::zero(), T::max);
    let f_sup = if f.n_slices() == 0 { T::zero() } else { f_sup.max(f.slice_at_time(t1).sup_norm()) };
    let sup = traj.sup_over(t1, t_star);
    let bound = v1 + (t_star - t1) * f_sup;
    MaxPrincipleReport {
        sup,
        bound,
        holds: sup <= bound * (T::one() + T::lit(1e-12)) + T::lit(1e-14),
    }
}

/// Controls of one Feynman–Kac estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct McConfig<T: Real> {
    pub n_paths: usize,
    /// Euler–Maruyama step.
    pub ds: T,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct McEstimate<T: Real> {
    pub estimate: T,
    pub standard_error: T,
    pub n_paths: usize,
}

/// Periodic bilinear interpolation of grid values at (x₁, x₂).
pub fn bilinear<T: Real>(lattice: TorusLattice, x: [T; 2], node: impl Fn(isize, isize) -> T) -> T {
    let h: T = lattice.spacing();
    let r0 = x[0] / h;
    let r1 = x[1] / h;
    let i = r0.floor();
    let j = r1.floor();
    let a = r0 - i;
    let c = r1 - j;
    let i = i.to_isize().unwrap_or(0);
    let j = j.to_isize().unwrap_or(0);
    let one = T::one();
    node(i, j) * (one - a) * (one - c) + node(i + 1, j) * a * (one - c) + node(i, j + 1) * (one - a) * c + node(i + 1, j + 1) * a * c
}

/// v_t(x) = E[e^{−m²(t−T₁)}v_{T₁}(X_{t−T₁}) + ∫₀^{t−T₁} e^{−m²s} f(t−s, X_s) ds]
/// with dX = b(t−s, X)ds + √2 dB, X₀ = x.
#[allow(clippy::too_many_arguments)]
pub fn solve_transport_mc<T: Real>(
    b: &[SpaceTimeSeries<T>; 2],
    f: &SpaceTimeSeries<T>,
    v_t1: &GridField<T>,
    mass: T,
    t1: T,
    t: T,
    x: [T; 2],
    mc: &McConfig<T>,
) -> Result<McEstimate<T>> {
    if mc.n_paths < 100 {
        return Err(Error::InsufficientSamples { got: mc.n_paths, min: 100 });
    }
    if !(t >= t1) || !(mc.ds > T::zero()) {
        return Err(Error::TimeRange(format!("need t ≥ T₁ and ds > 0, got t = {t}, T₁ = {t1}")));
    }
    let lattice = v_t1.lattice();
    check_lattice(lattice, f.lattice())?;
    b.iter().try_for_each(|c| check_lattice(lattice, c.lattice()))?;
    let horizon = t - t1;
    let steps = (horizon / mc.ds).ceil().to_usize().unwrap_or(0);
    let ds = if steps == 0 { T::zero() } else { horizon / T::from_usize_lossy(steps) };
    let m2 = mass * mass;
    let sqrt2ds = (T::lit(2.0) * ds).sqrt();
    let half = T::lit(0.5);
    let sample = |p: usize| -> T {
        let mut rng = rng::stream(mc.seed, p as u64, Purpose::Paths, 0);
        let mut pos = x;
        let mut integral = T::zero();
        let mut f_prev = bilinear(lattice, pos, |i, j| f.value_at_time(t, i, j));
        for k in 0..steps {
            let s = ds * T::from_usize_lossy(k);
            let tt = t - s;
            let drift = [
                bilinear(lattice, pos, |i, j| b[0].value_at_time(tt, i, j)),
                bilinear(lattice, pos, |i, j| b[1].value_at_time(tt, i, j)),
            ];
            for a in 0..2 {
                pos[a] = pos[a] + drift[a] * ds + sqrt2ds * rng::normal::<T>(&mut rng);
            }
            let s_next = s + ds;
            let f_next = bilinear(lattice, pos, |i, j| f.value_at_time(t - s_next, i, j));
            integral += half * ds * ((-m2 * s).exp() * f_prev + (-m2 * s_next).exp() * f_next);
            f_prev = f_next;
        }
        (-m2 * horizon).exp() * bilinear(lattice, pos, |i, j| v_t1.get_wrapped(i, j)) + integral
    };
    let values: Vec<T> = (0..mc.n_paths).into_par_iter().map(sample).collect();
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / (n - T::one());
    Ok(McEstimate {
        estimate: mean,
        standard_error: (var / n).sqrt(),
        n_paths: mc.n_paths,
    })
}

/// Direct solve on [s, t] against the restart at r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FlowCompositionReport<T: Real> {
    pub s: T,
    pub r: T,
    pub t: T,
    /// ‖u(t; r, u(r; s, v)) − u(t; s, v)‖∞.
    pub difference: T,
    /// Same restart driven by the control noise on [r, t], if given.
    pub control_difference: Option<T>,
}

/// Restart identity for the Wiener flow. `control` must share the lattice and
/// step of `problem` and carries a different noise path.
pub fn flow_composition_check<T: Real>(
    problem: &PdeProblem<T>,
    control: Option<&PdeProblem<T>>,
    config: &SolverConfig<T>,
    times: [T; 3],
) -> Result<FlowCompositionReport<T>> {
    let [s, r, t] = times;
    if !(s < r && r < t) {
        return Err(Error::TimeRange(format!("need s < r < t, got {s}, {r}, {t}")));
    }
    if !matches!(problem.noise, NoiseSource::Wiener(_)) {
        return Err(Error::Unsupported("flow composition is checked for the Wiener family".into()));
    }
    let base = SolverConfig {
        save_every: 0,
        ..*config
    };
    let direct = solve_renormalized(problem, &SolverConfig { t_start: s, t_end: t, ..base })?;
    let first = solve_renormalized(problem, &SolverConfig { t_start: s, t_end: r, ..base })?;
    let restart = |p: &PdeProblem<T>| -> Result<GridField<T>> {
        let q = PdeProblem {
            u0: first.final_field().clone(),
            ..p.clone()
        };
        Ok(solve_renormalized(&q, &SolverConfig { t_start: r, t_end: t, ..base })?.final_field().clone())
    };
    let difference = restart(problem)?.max_abs_diff(direct.final_field());
    let control_difference = match control {
        Some(c) => Some(restart(c)?.max_abs_diff(direct.final_field())),
        None => None,
    };
    Ok(FlowCompositionReport {
        s,
        r,
        t,
        difference,
        control_difference,
    })
}
