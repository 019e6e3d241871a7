use std::collections::VecDeque;

use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{mode_key, normal, stream, Purpose};
use super::{czero, white_noise_variance, RegularizationSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solver::HeatStepper;
use crate::torus::{Fft2, GridField, SpaceTimeField, SpectralField, TorusLattice};

/// β² must stay below 16π/3.
pub fn sg_max_beta_sq<T: Real>() -> T {
    T::lit(16.0 * std::f64::consts::PI / 3.0)
}

/// Parameters of one Sine-Gordon noise realization on [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SgNoiseSpec<T: Real> {
    pub lattice: TorusLattice,
    pub beta: T,
    pub reg: RegularizationSpec<T>,
    pub dt: T,
    pub t_end: T,
    pub seed: u64,
}

impl<T: Real> SgNoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta * self.beta < sg_max_beta_sq()) {
            return Err(Error::OutOfRange(format!("beta² must be below 16π/3, got beta = {}", self.beta)));
        }
        if !(self.dt > T::zero()) || self.t_end < self.dt {
            return Err(Error::OutOfRange("need 0 < dt ≤ t_end".into()));
        }
        self.reg.validate(self.lattice)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Moving-average length covering a time width ε².
    pub fn window(&self) -> usize {
        let w = (self.reg.epsilon * self.reg.epsilon / self.dt).round();
        w.to_usize().unwrap_or(1).max(1)
    }

    /// ε^{−β²/4π}.
    pub fn prefactor(&self) -> T {
        let e = -self.beta * self.beta / (T::lit(4.0) * T::PI());
        self.reg.epsilon.powf(e)
    }
}

/// Sine-Gordon objects stored over the whole time range.
#[derive(Debug, Clone)]
pub struct SineGordonNoise<T: Real> {
    pub beta: T,
    pub epsilon: T,
    pub z_tilde: SpaceTimeField<T>,
    pub cos_noise: SpaceTimeField<T>,
    pub sin_noise: SpaceTimeField<T>,
}

struct Mode<T: Real> {
    k: [i64; 2],
    decay: T,
    sd: T,
    real: bool,
    rng: ChaCha8Rng,
    state: Complex<T>,
}

/// Step-by-step generator of (Z̃, cos noise, sin noise), starting from Z̃ = 0.
pub struct SgStream<T: Real> {
    spec: SgNoiseSpec<T>,
    fft: Fft2<T>,
    modes: Vec<Mode<T>>,
    history: VecDeque<SpectralField<T>>,
    running: SpectralField<T>,
    step: usize,
}

impl<T: Real> SgStream<T> {
    pub fn new(spec: SgNoiseSpec<T>, realization: u64) -> Result<Self> {
        spec.validate()?;
        let var = white_noise_variance::<T>();
        let nyq = spec.lattice.nyquist() as i64;
        let modes = spec
            .reg
            .canonical_modes()
            .into_iter()
            .map(|k| {
                let lambda = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
                let decay = (-lambda * spec.dt).exp();
                let cond = if k == [0, 0] {
                    var * spec.dt
                } else {
                    var * (-(-T::lit(2.0) * lambda * spec.dt).exp_m1()) / (T::lit(2.0) * lambda)
                };
                let real = (k[0] == 0 || k[0].abs() == nyq) && (k[1] == 0 || k[1].abs() == nyq);
                Mode {
                    k,
                    decay,
                    sd: cond.sqrt(),
                    real,
                    rng: stream(spec.seed, realization, Purpose::SineGordon, mode_key(k)),
                    state: czero(),
                }
            })
            .collect();
        let mut history = VecDeque::new();
        history.push_back(SpectralField::zeros(spec.lattice));
        Ok(Self {
            spec,
            fft: Fft2::new(spec.lattice),
            modes,
            history,
            running: SpectralField::zeros(spec.lattice),
            step: 0,
        })
    }

    pub fn spec(&self) -> &SgNoiseSpec<T> {
        &self.spec
    }

    fn averaged(&self) -> SpectralField<T> {
        let w = T::from_usize_lossy(self.spec.window());
        let mut out = self.running.clone();
        out.coeffs_mut().iter_mut().for_each(|c| *c = *c / w);
        out
    }

    /// Current Z̃ slice; zeros before t = 0 pad the moving average.
    pub fn z_tilde(&self) -> GridField<T> {
        self.fft.inverse(&self.averaged()).expect("matching lattice")
    }

    /// (Z̃, ε^{−β²/4π}cos(βZ̃), ε^{−β²/4π}sin(βZ̃)) at the current step.
    pub fn current(&self) -> (GridField<T>, GridField<T>, GridField<T>) {
        let z = self.z_tilde();
        let pre = self.spec.prefactor();
        let beta = self.spec.beta;
        let c = z.map(|v| pre * (beta * v).cos());
        let s = z.map(|v| pre * (beta * v).sin());
        (z, c, s)
    }

    /// Advances the raw Ornstein–Uhlenbeck modes by one exact step.
    pub fn advance(&mut self) {
        let mut raw = SpectralField::zeros(self.spec.lattice);
        for m in &mut self.modes {
            let innovation = if m.real {
                Complex::new(normal::<T>(&mut m.rng) * m.sd, T::zero())
            } else {
                let s = m.sd / T::lit(2.0).sqrt();
                Complex::new(normal::<T>(&mut m.rng) * s, normal::<T>(&mut m.rng) * s)
            };
            m.state = m.state * m.decay + innovation;
            raw.set(m.k, m.state);
            if !m.real {
                raw.set([-m.k[0], -m.k[1]], m.state.conj());
            }
        }
        for (acc, v) in self.running.coeffs_mut().iter_mut().zip(raw.coeffs()) {
            *acc = *acc + *v;
        }
        self.history.push_back(raw);
        if self.history.len() > self.spec.window() {
            let old = self.history.pop_front().expect("non-empty history");
            for (acc, v) in self.running.coeffs_mut().iter_mut().zip(old.coeffs()) {
                *acc = *acc - *v;
            }
        }
        self.step += 1;
    }

    pub fn time(&self) -> T {
        self.spec.dt * T::from_usize_lossy(self.step)
    }
}

pub fn sample_sg_noise<T: Real>(spec: SgNoiseSpec<T>) -> Result<SineGordonNoise<T>> {
    sample_sg_noise_realization(spec, 0)
}

pub fn sample_sg_noise_realization<T: Real>(spec: SgNoiseSpec<T>, realization: u64) -> Result<SineGordonNoise<T>> {
    let mut gen = SgStream::new(spec, realization)?;
    let steps = spec.n_steps();
    let (mut zs, mut cs, mut ss) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..=steps {
        if s > 0 {
            gen.advance();
        }
        let (z, c, si) = gen.current();
        zs.push(z);
        cs.push(c);
        ss.push(si);
    }
    Ok(SineGordonNoise {
        beta: spec.beta,
        epsilon: spec.reg.epsilon,
        z_tilde: SpaceTimeField::new(T::zero(), spec.dt, zs)?,
        cos_noise: SpaceTimeField::new(T::zero(), spec.dt, cs)?,
        sin_noise: SpaceTimeField::new(T::zero(), spec.dt, ss)?,
    })
}

/// Monte-Carlo estimate of C_{a,b} = E[\<1b>_b · \<0b>_a], indices 0 = cos, 1 = sin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RenormEstimate<T: Real> {
    pub c: [[T; 2]; 2],
    pub stderr: [[T; 2]; 2],
    pub samples: usize,
    pub t_eval: T,
}

/// Averages the product of lollipops and noises over the grid at `t_end`,
/// then over independent realizations.
pub fn estimate_sg_renorm<T: Real>(spec: &SgNoiseSpec<T>, samples: usize) -> Result<RenormEstimate<T>> {
    const MIN_SAMPLES: usize = 100;
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples,
            min: MIN_SAMPLES,
        });
    }
    spec.validate()?;
    let per: Vec<Result<[[T; 2]; 2]>> = (0..samples as u64)
        .into_par_iter()
        .map(|r| realization_products(spec, r))
        .collect();
    let mut values = Vec::with_capacity(samples);
    for v in per {
        values.push(v?);
    }
    let nf = T::from_usize_lossy(samples);
    let mut c = [[T::zero(); 2]; 2];
    let mut se = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mean = values.iter().map(|v| v[a][b]).sum::<T>() / nf;
            let var = values.iter().map(|v| (v[a][b] - mean).powi(2)).sum::<T>() / (nf - T::one());
            c[a][b] = mean;
            se[a][b] = (var / nf).sqrt();
        }
    }
    Ok(RenormEstimate {
        c,
        stderr: se,
        samples,
        t_eval: spec.dt * T::from_usize_lossy(spec.n_steps()),
    })
}

fn realization_products<T: Real>(spec: &SgNoiseSpec<T>, realization: u64) -> Result<[[T; 2]; 2]> {
    let mut gen = SgStream::new(*spec, realization)?;
    let stepper = HeatStepper::new(spec.lattice, spec.dt, T::zero());
    let fft = stepper.fft();
    let (_, c0, s0) = gen.current();
    let mut f_prev = [fft.forward(&c0)?, fft.forward(&s0)?];
    let mut lolli = [SpectralField::zeros(spec.lattice), SpectralField::zeros(spec.lattice)];
    let mut noise = [c0, s0];
    for _ in 0..spec.n_steps() {
        gen.advance();
        let (_, c, s) = gen.current();
        let f_next = [fft.forward(&c)?, fft.forward(&s)?];
        for b in 0..2 {
            stepper.step(&mut lolli[b], &f_prev[b], &f_next[b]);
        }
        f_prev = f_next;
        noise = [c, s];
    }
    let l = [fft.inverse(&lolli[0])?, fft.inverse(&lolli[1])?];
    let mut out = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = l[b].zip_map(&noise[a], |x, y| x * y).mean();
        }
    }
    Ok(out)
}
