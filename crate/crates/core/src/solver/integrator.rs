//! Exponential integrators for (∂_t − Δ + m²)u = N(u, t) in spectral space.

use serde::{Deserialize, Serialize};

use super::phi::{etdrk4_weights, phi1};
use crate::error::Result;
use crate::scalar::Real;
use crate::torus::{Fft2, GridField, SpectralField, TorusLattice};

/// Time discretization of the nonlinear part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// û ← e^{z}û + hφ₁(z)N̂(uₙ).
    ExponentialEuler,
    /// Cox–Matthews fourth-order exponential Runge–Kutta.
    ExponentialRk4,
    /// û ← (û + hN̂(uₙ))/(1 + hλ).
    SemiImplicit,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExponentialEuler => "exponential-euler",
            Self::ExponentialRk4 => "exponential-rk4",
            Self::SemiImplicit => "semi-implicit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exponential-euler" | "etd1" => Some(Self::ExponentialEuler),
            "exponential-rk4" | "etdrk4" | "exponential-integrator" => Some(Self::ExponentialRk4),
            "semi-implicit" => Some(Self::SemiImplicit),
            _ => None,
        }
    }
}

/// Per-mode weights of every scheme for one (lattice, dt, mass).
#[derive(Debug, Clone)]
pub struct Integrator<T: Real> {
    pub(crate) fft: Fft2<T>,
    dt: T,
    lambda: Vec<T>,
    decay: Vec<T>,
    half_decay: Vec<T>,
    euler: Vec<T>,
    half_euler: Vec<T>,
    rk: [Vec<T>; 3],
    mask: Vec<bool>,
}

/// Stage time inside a step as a fraction θ ∈ [0, 1].
pub type StageFraction<T> = T;

impl<T: Real> Integrator<T> {
    pub fn new(lattice: TorusLattice, dt: T, mass: T, dealias: bool) -> Self {
        let n = lattice.n();
        let h = dt.as_f64();
        let m2 = (mass * mass).as_f64();
        let third = n as i64 / 3;
        let mut s = Self {
            fft: Fft2::new(lattice),
            dt,
            lambda: Vec::with_capacity(lattice.len()),
            decay: Vec::with_capacity(lattice.len()),
            half_decay: Vec::with_capacity(lattice.len()),
            euler: Vec::with_capacity(lattice.len()),
            half_euler: Vec::with_capacity(lattice.len()),
            rk: [Vec::new(), Vec::new(), Vec::new()],
            mask: Vec::with_capacity(lattice.len()),
        };
        for idx in 0..lattice.len() {
            let k = [lattice.wavenumber(idx / n), lattice.wavenumber(idx % n)];
            let lam = (k[0] * k[0] + k[1] * k[1]) as f64 + m2;
            let z = -lam * h;
            s.lambda.push(T::lit(lam));
            s.decay.push(T::lit(z.exp()));
            s.half_decay.push(T::lit((0.5 * z).exp()));
            s.euler.push(T::lit(h * phi1(z)));
            s.half_euler.push(T::lit(0.5 * h * phi1(0.5 * z)));
            let (f1, f2, f3) = etdrk4_weights(z);
            s.rk[0].push(T::lit(h * f1));
            s.rk[1].push(T::lit(h * f2));
            s.rk[2].push(T::lit(h * f3));
            s.mask.push(!dealias || (k[0].abs() <= third && k[1].abs() <= third));
        }
        s
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// hφ₁(−λh) per mode.
    pub fn euler_weights(&self) -> &[T] {
        &self.euler
    }

    /// Zeroes modes outside the 2/3 band.
    pub fn dealias(&self, f: &mut SpectralField<T>) {
        for (c, &keep) in f.coeffs_mut().iter_mut().zip(&self.mask) {
            if !keep {
                *c = num_complex::Complex::new(T::zero(), T::zero());
            }
        }
    }

    /// Transform of a physical nonlinear term with dealiasing applied.
    pub fn transform(&self, f: &GridField<T>) -> Result<SpectralField<T>> {
        let mut s = self.fft.forward(f)?;
        self.dealias(&mut s);
        Ok(s)
    }

    /// û ← e^{z}û.
    pub fn propagate(&self, u: &mut SpectralField<T>) {
        for (c, &e) in u.coeffs_mut().iter_mut().zip(&self.decay) {
            *c = *c * e;
        }
    }

    /// Advances `u`, whose nodal values are `u_phys`, by one step and returns
    /// the new nodal values. `nonlinear(u, û, θ)` returns the dealiased
    /// transform of N at the stage time t + θ·dt.
    pub fn step<F>(&self, scheme: Scheme, u: &mut SpectralField<T>, u_phys: &GridField<T>, mut nonlinear: F) -> Result<GridField<T>>
    where
        F: FnMut(&GridField<T>, &SpectralField<T>, StageFraction<T>) -> Result<SpectralField<T>>,
    {
        let half = T::lit(0.5);
        let phys = |v: &SpectralField<T>| self.fft.inverse(v);
        match scheme {
            Scheme::ExponentialEuler => {
                let n0 = nonlinear(u_phys, u, T::zero())?;
                for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
                    *c = *c * self.decay[idx] + n0.coeffs()[idx] * self.euler[idx];
                }
            }
            Scheme::SemiImplicit => {
                let n0 = nonlinear(u_phys, u, T::zero())?;
                for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
                    *c = (*c + n0.coeffs()[idx] * self.dt) / (T::one() + self.dt * self.lambda[idx]);
                }
            }
            Scheme::ExponentialRk4 => {
                let nu = nonlinear(u_phys, u, T::zero())?;
                let lin = |base: &SpectralField<T>, n: &SpectralField<T>| {
                    let mut out = base.clone();
                    for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
                        *c = *c * self.half_decay[idx] + n.coeffs()[idx] * self.half_euler[idx];
                    }
                    out
                };
                let a = lin(u, &nu);
                let na = nonlinear(&phys(&a)?, &a, half)?;
                let b = lin(u, &na);
                let nb = nonlinear(&phys(&b)?, &b, half)?;
                let mut forcing = nb.clone();
                for (idx, c) in forcing.coeffs_mut().iter_mut().enumerate() {
                    *c = *c * T::lit(2.0) - nu.coeffs()[idx];
                }
                let c = lin(&a, &forcing);
                let nc = nonlinear(&phys(&c)?, &c, T::one())?;
                for (idx, v) in u.coeffs_mut().iter_mut().enumerate() {
                    *v = *v * self.decay[idx]
                        + nu.coeffs()[idx] * self.rk[0][idx]
                        + (na.coeffs()[idx] + nb.coeffs()[idx]) * (self.rk[1][idx] * T::lit(2.0))
                        + nc.coeffs()[idx] * self.rk[2][idx];
                }
            }
        }
        self.fft.inverse(u)
    }
}
