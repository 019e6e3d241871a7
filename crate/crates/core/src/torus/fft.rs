use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{GridField, SpectralField, TorusLattice};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planned 2-d transforms for one lattice. Forward carries the 1/n² factor so
/// that coefficients follow û_k = (2π)^{-2}⟨u, e_{−k}⟩; inverse is the plain sum.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    lattice: TorusLattice,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("lattice", &self.lattice).finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(lattice: TorusLattice) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            lattice,
            forward: planner.plan_fft_forward(lattice.n()),
            inverse: planner.plan_fft_inverse(lattice.n()),
        }
    }

    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    fn transform(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.lattice.n();
        let zero = Complex::new(T::zero(), T::zero());
        let mut scratch = vec![zero; plan.get_inplace_scratch_len()];
        let mut tmp = vec![zero; buf.len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose::transpose(buf, &mut tmp, n, n);
        plan.process_with_scratch(&mut tmp, &mut scratch);
        transpose::transpose(&tmp, buf, n, n);
    }

    /// In-place forward transform of complex nodal values.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, &self.forward);
        let norm = T::one() / T::from_usize_lossy(self.lattice.len());
        buf.iter_mut().for_each(|c| *c = *c * norm);
    }

    /// In-place inverse transform to complex nodal values.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, &self.inverse);
    }

    pub fn forward(&self, field: &GridField<T>) -> Result<SpectralField<T>> {
        check(self.lattice, field.lattice())?;
        let mut buf: Vec<Complex<T>> = field
            .values()
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.forward_in_place(&mut buf);
        SpectralField::from_coeffs(self.lattice, buf)
    }

    /// Inverse transform keeping the real part.
    pub fn inverse(&self, spec: &SpectralField<T>) -> Result<GridField<T>> {
        check(self.lattice, spec.lattice())?;
        let mut buf = spec.coeffs().to_vec();
        self.inverse_in_place(&mut buf);
        GridField::from_values(self.lattice, buf.into_iter().map(|c| c.re).collect())
    }

    /// Spectral partial derivatives; the Nyquist row and column are dropped.
    pub fn gradient(&self, field: &GridField<T>) -> Result<[GridField<T>; 2]> {
        let spec = self.forward(field)?;
        Ok([self.derivative(&spec, 0)?, self.derivative(&spec, 1)?])
    }

    /// ∂_{x_axis} of a spectral field, returned on the grid.
    pub fn derivative(&self, spec: &SpectralField<T>, axis: usize) -> Result<GridField<T>> {
        let n = self.lattice.n();
        let nyq = self.lattice.nyquist() as i64;
        let mut buf = spec.coeffs().to_vec();
        for (idx, c) in buf.iter_mut().enumerate() {
            let k = [self.lattice.wavenumber(idx / n), self.lattice.wavenumber(idx % n)];
            if k[0].abs() == nyq || k[1].abs() == nyq {
                *c = Complex::new(T::zero(), T::zero());
            } else {
                let f = T::from_i64(k[axis]).expect("wavenumber");
                *c = Complex::new(-c.im * f, c.re * f);
            }
        }
        self.inverse_in_place(&mut buf);
        GridField::from_values(self.lattice, buf.into_iter().map(|c| c.re).collect())
    }
}

fn check(expected: TorusLattice, found: TorusLattice) -> Result<()> {
    if expected != found {
        return Err(Error::LatticeMismatch {
            expected: expected.n(),
            found: found.n(),
        });
    }
    Ok(())
}

/// One-shot forward transform.
pub fn fft_forward<T: Real>(field: &GridField<T>) -> SpectralField<T> {
    Fft2::new(field.lattice())
        .forward(field)
        .expect("plan built for the field's lattice")
}

/// One-shot inverse transform, real part.
pub fn fft_inverse<T: Real>(spec: &SpectralField<T>) -> GridField<T> {
    Fft2::new(spec.lattice())
        .inverse(spec)
        .expect("plan built for the field's lattice")
}
