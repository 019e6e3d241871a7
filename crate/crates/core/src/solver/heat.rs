use super::phi::{phi1, phi2};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::{Fft2, GridField, SpaceTimeField, SpaceTimeSeries, SpectralField, TorusLattice};

/// Exact per-mode propagator of (∂_t − Δ + m²)u = f for forcing that is
/// linear in time across each step.
#[derive(Debug, Clone)]
pub struct HeatStepper<T: Real> {
    fft: Fft2<T>,
    decay: Vec<T>,
    w1: Vec<T>,
    w2: Vec<T>,
}

impl<T: Real> HeatStepper<T> {
    pub fn new(lattice: TorusLattice, dt: T, mass: T) -> Self {
        let n = lattice.n();
        let h = dt.as_f64();
        let m2 = (mass * mass).as_f64();
        let mut decay = Vec::with_capacity(lattice.len());
        let mut w1 = Vec::with_capacity(lattice.len());
        let mut w2 = Vec::with_capacity(lattice.len());
        for idx in 0..lattice.len() {
            let k = [lattice.wavenumber(idx / n), lattice.wavenumber(idx % n)];
            let lambda = (k[0] * k[0] + k[1] * k[1]) as f64 + m2;
            let z = -lambda * h;
            decay.push(T::lit(z.exp()));
            w1.push(T::lit(h * phi1(z)));
            w2.push(T::lit(h * phi2(z)));
        }
        Self {
            fft: Fft2::new(lattice),
            decay,
            w1,
            w2,
        }
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    /// One step in spectral space: û ← e^{z}û + h φ₁ f̂₀ + h φ₂ (f̂₁ − f̂₀).
    pub fn step(&self, u: &mut SpectralField<T>, f0: &SpectralField<T>, f1: &SpectralField<T>) {
        let (a, b) = (f0.coeffs(), f1.coeffs());
        for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c = *c * self.decay[idx] + a[idx] * self.w1[idx] + (b[idx] - a[idx]) * self.w2[idx];
        }
    }

    /// Homogeneous step û ← e^{z}û.
    pub fn decay(&self, u: &mut SpectralField<T>) {
        for (idx, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c = *c * self.decay[idx];
        }
    }
}

/// Solves (∂_t − Δ + m²)u = f from `u0` at the first forcing time, exactly
/// for forcing interpolated linearly between slices.
pub fn solve_linear_heat<T: Real>(
    forcing: &SpaceTimeSeries<T>,
    u0: &GridField<T>,
    mass: T,
) -> Result<SpaceTimeField<T>> {
    let lattice = forcing.lattice();
    if u0.lattice() != lattice {
        return Err(Error::LatticeMismatch {
            expected: lattice.n(),
            found: u0.lattice().n(),
        });
    }
    let stepper = HeatStepper::new(lattice, forcing.dt(), mass);
    let fft = stepper.fft();
    let mut u = fft.forward(u0)?;
    let mut f_prev = fft.forward(&forcing.slice(0))?;
    let mut slices = Vec::with_capacity(forcing.n_slices());
    slices.push(u0.clone());
    for s in 1..forcing.n_slices() {
        let f_next = fft.forward(&forcing.slice(s))?;
        stepper.step(&mut u, &f_prev, &f_next);
        slices.push(fft.inverse(&u)?);
        f_prev = f_next;
    }
    SpaceTimeField::new(forcing.t0(), forcing.dt(), slices)
}

/// Largest deviation of a stored solution from one exact step of the
/// propagator, i.e. the residual of the discrete heat operator.
pub fn heat_residual<T: Real>(
    solution: &SpaceTimeSeries<T>,
    forcing: &SpaceTimeSeries<T>,
    mass: T,
) -> Result<T> {
    let lattice = solution.lattice();
    let stepper = HeatStepper::new(lattice, solution.dt(), mass);
    let fft = stepper.fft();
    let mut worst = T::zero();
    let n = solution.n_slices().min(forcing.n_slices());
    let mut f_prev = fft.forward(&forcing.slice_at_time(solution.time(0)))?;
    for s in 1..n {
        let mut u = fft.forward(&solution.slice(s - 1))?;
        let f_next = fft.forward(&forcing.slice_at_time(solution.time(s)))?;
        stepper.step(&mut u, &f_prev, &f_next);
        let stepped = fft.inverse(&u)?;
        worst = worst.max(stepped.max_abs_diff(&solution.slice(s)));
        f_prev = f_next;
    }
    Ok(worst)
}
