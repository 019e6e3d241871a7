//! The renormalized equation, its configuration and the trajectory record.

use serde::{Deserialize, Serialize};

use super::integrator::{Integrator, Scheme};
use super::sigma::Sigma;
use crate::error::{Error, Result};
use crate::noise::{SgNoiseSpec, SgStream, WienerNoise};
use crate::scalar::Real;
use crate::torus::{GridField, SpaceTimeField, SpaceTimeSeries, TorusLattice};

/// Noise driving each component of the equation.
#[derive(Debug, Clone)]
pub enum NoiseSource<T: Real> {
    None,
    /// One field per component, linear in time between stored slices.
    Fields(Vec<SpaceTimeSeries<T>>),
    /// (cos noise, sin noise) generated step by step; the stream's dt must
    /// equal the solver's.
    SineGordon { spec: SgNoiseSpec<T>, realization: u64 },
    /// Itô increments consumed one per step.
    Wiener(WienerNoise<T>),
}

impl<T: Real> NoiseSource<T> {
    pub fn components(&self) -> usize {
        match self {
            Self::None => 0,
            Self::Fields(f) => f.len(),
            Self::SineGordon { .. } => 2,
            Self::Wiener(_) => 1,
        }
    }
}

/// (∂_t − Δ + m²)u = Σᵢσᵢ(u)ξᵢ − Σᵢⱼσ′ⱼσᵢ(u)C_{i,j}.
#[derive(Debug, Clone)]
pub struct PdeProblem<T: Real> {
    pub sigmas: Vec<Sigma<T>>,
    pub noise: NoiseSource<T>,
    pub renorm: Vec<Vec<T>>,
    pub mass: T,
    pub u0: GridField<T>,
    pub kappa: T,
}

/// Sampled C_σ check of a problem's nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SigmaBoundReport<T: Real> {
    pub sampled: T,
    pub c_sigma: T,
    pub holds: bool,
}

impl<T: Real> PdeProblem<T> {
    /// One noise, one nonlinearity, C given.
    pub fn scalar(sigma: Sigma<T>, noise: NoiseSource<T>, c: T, mass: T, u0: GridField<T>) -> Self {
        Self {
            sigmas: vec![sigma],
            noise,
            renorm: vec![vec![c]],
            mass,
            u0,
            kappa: T::lit(crate::bounds::DEFAULT_KAPPA),
        }
    }

    pub fn lattice(&self) -> TorusLattice {
        self.u0.lattice()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.sigmas.len();
        let comps = self.noise.components();
        if comps != 0 && comps != m {
            return Err(Error::OutOfRange(format!("{comps} noise components for {m} nonlinearities")));
        }
        if self.renorm.len() != m || self.renorm.iter().any(|r| r.len() != m) {
            return Err(Error::OutOfRange(format!("renormalization matrix must be {m}x{m}")));
        }
        if !(self.mass >= T::zero()) {
            return Err(Error::OutOfRange("mass must be non-negative".into()));
        }
        let lattice = self.lattice();
        let check = |l: TorusLattice| {
            if l == lattice {
                Ok(())
            } else {
                Err(Error::LatticeMismatch {
                    expected: lattice.n(),
                    found: l.n(),
                })
            }
        };
        match &self.noise {
            NoiseSource::None => {}
            NoiseSource::Fields(f) => f.iter().try_for_each(|s| check(s.lattice()))?,
            NoiseSource::SineGordon { spec, .. } => check(spec.lattice)?,
            NoiseSource::Wiener(w) => check(w.lattice)?,
        }
        Ok(())
    }

    /// max over components of the sampled bound against `c_sigma`.
    pub fn sigma_bound(&self, c_sigma: T) -> SigmaBoundReport<T> {
        let sampled = self.sigmas.iter().map(|s| s.sampled_bound()).fold(T::zero(), T::max);
        SigmaBoundReport {
            sampled,
            c_sigma,
            holds: sampled <= c_sigma,
        }
    }

    /// Σᵢσᵢ(u)ξᵢ − Σᵢⱼσ′ⱼσᵢ(u)C_{i,j} pointwise.
    fn drift(&self, u: &GridField<T>, noise: &[GridField<T>]) -> GridField<T> {
        let m = self.sigmas.len();
        let mut vd = vec![(T::zero(), T::zero()); m];
        let vals = u
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                for (slot, s) in vd.iter_mut().zip(&self.sigmas) {
                    *slot = s.value_d1(v);
                }
                let mut acc = T::zero();
                for i in 0..m {
                    let si = vd[i].0;
                    if let Some(xi) = noise.get(i) {
                        acc += si * xi.values()[idx];
                    }
                    for j in 0..m {
                        let c = self.renorm[i][j];
                        if c != T::zero() {
                            acc -= vd[j].1 * si * c;
                        }
                    }
                }
                acc
            })
            .collect();
        GridField::from_values(u.lattice(), vals).expect("same lattice")
    }
}

/// Time stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolverConfig<T: Real> {
    pub n_spatial: usize,
    pub dt: T,
    pub t_start: T,
    pub t_end: T,
    pub scheme: Scheme,
    pub seed: u64,
    /// Store every k-th slice; 0 stores none.
    pub save_every: usize,
    pub dealias: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(n_spatial: usize, dt: T, t_end: T, scheme: Scheme) -> Self {
        Self {
            n_spatial,
            dt,
            t_start: T::zero(),
            t_end,
            scheme,
            seed: 0,
            save_every: 1,
            dealias: true,
        }
    }

    pub fn with_start(mut self, t_start: T) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn with_save_every(mut self, k: usize) -> Self {
        self.save_every = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn lattice(&self) -> Result<TorusLattice> {
        TorusLattice::new(self.n_spatial)
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round().to_usize().unwrap_or(0)
    }

    /// dt ≤ h²/4 and t_end ≥ t_start + dt.
    pub fn validate(&self) -> Result<()> {
        let lattice = self.lattice()?;
        let h: T = lattice.spacing();
        if !(self.dt > T::zero()) {
            return Err(Error::OutOfRange("dt must be positive".into()));
        }
        if self.dt > T::lit(0.25) * h * h * (T::one() + T::lit(1e-12)) {
            return Err(Error::OutOfRange(format!("dt = {} exceeds h^2/4 = {}", self.dt, T::lit(0.25) * h * h)));
        }
        if self.t_end < self.t_start + self.dt * (T::one() - T::lit(1e-9)) {
            return Err(Error::OutOfRange("t_end must be at least t_start + dt".into()));
        }
        Ok(())
    }
}

/// Solution record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T: Real> {
    pub scheme: Scheme,
    pub dt: T,
    pub t_start: T,
    pub seed: u64,
    pub renorm: Vec<Vec<T>>,
    /// (t, ‖u(t)‖∞) after every step, starting with the initial datum.
    pub sup_series: Vec<(T, T)>,
    /// Y_n = max of the sup norm over [t_start + n − 1, t_start + n].
    pub intervals: Vec<T>,
    #[serde(skip)]
    pub field: Option<SpaceTimeField<T>>,
    #[serde(skip)]
    pub final_state: Option<GridField<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn final_field(&self) -> &GridField<T> {
        self.final_state.as_ref().expect("trajectory holds its final state")
    }

    pub fn t_end(&self) -> T {
        self.sup_series.last().map(|p| p.0).unwrap_or(self.t_start)
    }

    /// Stored slices as a series.
    pub fn series(&self) -> Option<SpaceTimeSeries<T>> {
        self.field.clone().map(SpaceTimeSeries::Stored)
    }

    /// sup norm over [a, b] from the per-step series.
    pub fn sup_over(&self, a: T, b: T) -> T {
        let tol = self.dt * T::lit(1e-6);
        self.sup_series
            .iter()
            .filter(|(t, _)| *t >= a - tol && *t <= b + tol)
            .fold(T::zero(), |m, p| m.max(p.1))
    }
}

fn unit_intervals<T: Real>(sup: &[(T, T)], t_start: T, dt: T) -> Vec<T> {
    let Some(&(t_last, _)) = sup.last() else {
        return Vec::new();
    };
    let tol = dt * T::lit(1e-6);
    let count = ((t_last - t_start) + tol).floor().to_usize().unwrap_or(0);
    (1..=count)
        .map(|n| {
            let a = t_start + T::from_usize_lossy(n - 1);
            let b = a + T::one();
            sup.iter()
                .filter(|(t, _)| *t >= a - tol && *t <= b + tol)
                .fold(T::zero(), |m, p| m.max(p.1))
        })
        .collect()
}

/// Blow-up threshold on the sup norm.
const OVERFLOW: f64 = 1e100;

/// Records steps, stored slices and blow-up witnesses.
pub(crate) struct Recorder<T: Real> {
    sup: Vec<(T, T)>,
    slices: Vec<GridField<T>>,
    save_every: usize,
}

impl<T: Real> Recorder<T> {
    pub(crate) fn new(t0: T, u0: &GridField<T>, save_every: usize) -> Self {
        let mut slices = Vec::new();
        if save_every > 0 {
            slices.push(u0.clone());
        }
        Self {
            sup: vec![(t0, u0.sup_norm())],
            slices,
            save_every,
        }
    }

    pub(crate) fn record(&mut self, step: usize, t: T, u: &GridField<T>) -> Result<()> {
        let sup = u.sup_norm();
        if !u.is_finite() || !(sup < T::lit(OVERFLOW)) {
            let last = self.sup.last().map(|p| p.1).unwrap_or(T::zero());
            return Err(Error::BlowUp {
                t: t.as_f64(),
                last_sup: last.as_f64(),
            });
        }
        self.sup.push((t, sup));
        if self.save_every > 0 && step % self.save_every == 0 {
            self.slices.push(u.clone());
        }
        Ok(())
    }

    pub(crate) fn finish(self, scheme: Scheme, dt: T, t_start: T, seed: u64, renorm: Vec<Vec<T>>, last: GridField<T>) -> Result<Trajectory<T>> {
        let field = if self.save_every > 0 {
            Some(SpaceTimeField::new(t_start, dt * T::from_usize_lossy(self.save_every), self.slices)?)
        } else {
            None
        };
        let intervals = unit_intervals(&self.sup, t_start, dt);
        Ok(Trajectory {
            scheme,
            dt,
            t_start,
            seed,
            renorm,
            sup_series: self.sup,
            intervals,
            field,
            final_state: Some(last),
        })
    }
}

/// Noise values at both ends of the current step.
struct NoiseCursor<T: Real> {
    start: Vec<GridField<T>>,
    end: Vec<GridField<T>>,
    stream: Option<SgStream<T>>,
}

impl<T: Real> NoiseCursor<T> {
    fn new(source: &NoiseSource<T>, t_start: T, dt: T) -> Result<Self> {
        match source {
            NoiseSource::SineGordon { spec, realization } => {
                if (spec.dt - dt).abs() > dt * T::lit(1e-9) {
                    return Err(Error::OutOfRange("Sine-Gordon stream dt must equal the solver dt".into()));
                }
                let mut stream = SgStream::new(*spec, *realization)?;
                let skip = (t_start / dt).round().to_usize().unwrap_or(0);
                for _ in 0..skip {
                    stream.advance();
                }
                let (_, c, s) = stream.current();
                Ok(Self {
                    start: vec![c.clone(), s.clone()],
                    end: vec![c, s],
                    stream: Some(stream),
                })
            }
            _ => Ok(Self {
                start: Vec::new(),
                end: Vec::new(),
                stream: None,
            }),
        }
    }

    /// Loads [t, t + dt].
    fn load(&mut self, source: &NoiseSource<T>, t: T, dt: T) {
        match source {
            NoiseSource::Fields(f) => {
                self.start = f.iter().map(|s| s.slice_at_time(t)).collect();
                self.end = f.iter().map(|s| s.slice_at_time(t + dt)).collect();
            }
            NoiseSource::SineGordon { .. } => {
                let stream = self.stream.as_mut().expect("stream present");
                std::mem::swap(&mut self.start, &mut self.end);
                stream.advance();
                let (_, c, s) = stream.current();
                self.end = vec![c, s];
            }
            NoiseSource::None | NoiseSource::Wiener(_) => {}
        }
    }

    fn stage(&self, theta: T) -> Vec<GridField<T>> {
        if theta == T::zero() {
            return self.start.clone();
        }
        if theta == T::one() {
            return self.end.clone();
        }
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| a.zip_map(b, |x, y| x + theta * (y - x)))
            .collect()
    }
}

/// Solves the renormalized equation over [t_start, t_end].
pub fn solve_renormalized<T: Real>(problem: &PdeProblem<T>, config: &SolverConfig<T>) -> Result<Trajectory<T>> {
    problem.validate()?;
    config.validate()?;
    let lattice = config.lattice()?;
    if lattice != problem.lattice() {
        return Err(Error::LatticeMismatch {
            expected: lattice.n(),
            found: problem.lattice().n(),
        });
    }
    if let NoiseSource::Wiener(w) = &problem.noise {
        return solve_wiener(problem, w, config);
    }
    let integ = Integrator::new(lattice, config.dt, problem.mass, config.dealias);
    let mut u = integ.fft().forward(&problem.u0)?;
    let mut rec = Recorder::new(config.t_start, &problem.u0, config.save_every);
    let mut cursor = NoiseCursor::new(&problem.noise, config.t_start, config.dt)?;
    let mut last = problem.u0.clone();
    for step in 1..=config.n_steps() {
        let t = config.t_start + config.dt * T::from_usize_lossy(step - 1);
        cursor.load(&problem.noise, t, config.dt);
        last = integ.step(config.scheme, &mut u, &last, |phys, _, theta| {
            let noise = cursor.stage(theta);
            integ.transform(&problem.drift(phys, &noise))
        })?;
        rec.record(step, t + config.dt, &last)?;
    }
    rec.finish(config.scheme, config.dt, config.t_start, config.seed, problem.renorm.clone(), last)
}

/// Itô exponential Euler: û ← e^{z}(û + (σ(u)ΔW)^) + hφ₁(z)·(drift)^.
fn solve_wiener<T: Real>(problem: &PdeProblem<T>, noise: &WienerNoise<T>, config: &SolverConfig<T>) -> Result<Trajectory<T>> {
    if config.scheme != Scheme::ExponentialEuler {
        return Err(Error::Unsupported("the Itô Wiener case supports only the exponential Euler scheme".into()));
    }
    if (noise.dt - config.dt).abs() > config.dt * T::lit(1e-9) {
        return Err(Error::OutOfRange("Wiener increments must use the solver dt".into()));
    }
    let lattice = problem.lattice();
    let integ = Integrator::new(lattice, config.dt, problem.mass, config.dealias);
    let fft = integ.fft();
    let first = (config.t_start / config.dt).round().to_usize().unwrap_or(0);
    if first + config.n_steps() > noise.n_steps() {
        return Err(Error::TimeRange(format!(
            "noise holds {} increments, run needs {}",
            noise.n_steps(),
            first + config.n_steps()
        )));
    }
    let drift_only = PdeProblem {
        noise: NoiseSource::None,
        ..problem.clone()
    };
    let sigma = problem.sigmas[0];
    let mut u = fft.forward(&problem.u0)?;
    let mut phys = problem.u0.clone();
    let mut rec = Recorder::new(config.t_start, &problem.u0, config.save_every);
    for step in 1..=config.n_steps() {
        let dw = noise.increment_field(fft, first + step - 1);
        let kick = integ.transform(&phys.zip_map(&dw, |v, w| sigma.value(v) * w))?;
        let drift = integ.transform(&drift_only.drift(&phys, &[]))?;
        let euler = integ.euler_weights();
        for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c = *c + kick.coeffs()[idx];
        }
        integ.propagate(&mut u);
        for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c = *c + drift.coeffs()[idx] * euler[idx];
        }
        phys = fft.inverse(&u)?;
        rec.record(step, config.t_start + config.dt * T::from_usize_lossy(step), &phys)?;
    }
    rec.finish(config.scheme, config.dt, config.t_start, config.seed, problem.renorm.clone(), phys)
}
