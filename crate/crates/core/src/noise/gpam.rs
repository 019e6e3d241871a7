use num_complex::Complex;

use super::rng::{mode_key, normal, stream, Purpose};
use super::{czero, white_noise_variance, RegularizationSpec};
use crate::error::Result;
use crate::scalar::Real;
use crate::torus::{Fft2, GridField, SpaceTimeSeries, SpectralField, TorusLattice};

/// Time-constant spatial white noise truncated at |k| ≤ 1/ε.
#[derive(Debug, Clone)]
pub struct GpamNoise<T: Real> {
    pub xi_hat: SpectralField<T>,
    pub seed: u64,
    pub realization: u64,
    pub reg: RegularizationSpec<T>,
}

impl<T: Real> GpamNoise<T> {
    pub fn lattice(&self) -> TorusLattice {
        self.xi_hat.lattice()
    }

    /// Physical-space noise.
    pub fn field(&self) -> GridField<T> {
        Fft2::new(self.lattice())
            .inverse(&self.xi_hat)
            .expect("matching lattice")
    }

    /// Zero mode ξ̂₀, real by construction.
    pub fn zero_mode(&self) -> T {
        self.xi_hat.get([0, 0]).re
    }

    /// Noise with prescribed coefficients, for oracle tests.
    pub fn from_coefficients(xi_hat: SpectralField<T>, reg: RegularizationSpec<T>) -> Self {
        Self {
            xi_hat,
            seed: 0,
            realization: 0,
            reg,
        }
    }
}

pub fn sample_gpam_noise<T: Real>(
    lattice: TorusLattice,
    reg: RegularizationSpec<T>,
    seed: u64,
) -> Result<GpamNoise<T>> {
    sample_gpam_noise_realization(lattice, reg, seed, 0)
}

/// Hermitian Gaussian coefficients with E|ξ̂_k|² = (2π)^{-2}; self-conjugate
/// modes are real.
pub fn sample_gpam_noise_realization<T: Real>(
    lattice: TorusLattice,
    reg: RegularizationSpec<T>,
    seed: u64,
    realization: u64,
) -> Result<GpamNoise<T>> {
    reg.validate(lattice)?;
    let var = white_noise_variance::<T>();
    let nyq = lattice.nyquist() as i64;
    let mut xi = SpectralField::zeros(lattice);
    for k in reg.canonical_modes() {
        let mut rng = stream(seed, realization, Purpose::Gpam, mode_key(k));
        let self_conjugate = (k[0] == 0 || k[0].abs() == nyq) && (k[1] == 0 || k[1].abs() == nyq);
        if self_conjugate {
            xi.set(k, Complex::new(normal::<T>(&mut rng) * var.sqrt(), T::zero()));
        } else {
            let s = (var / T::lit(2.0)).sqrt();
            let c = Complex::new(normal::<T>(&mut rng) * s, normal::<T>(&mut rng) * s);
            xi.set(k, c);
            xi.set([-k[0], -k[1]], c.conj());
        }
    }
    Ok(GpamNoise {
        xi_hat: xi,
        seed,
        realization,
        reg,
    })
}

/// Spatial part Σ_{k≠0} ξ̂_k/|k|² e_k in spectral form.
fn tilde_lolli_hat<T: Real>(noise: &GpamNoise<T>) -> SpectralField<T> {
    let mut out = noise.xi_hat.clone();
    for idx in 0..out.coeffs().len() {
        let k = out.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1];
        out.coeffs_mut()[idx] = if k2 == 0 {
            czero()
        } else {
            noise.xi_hat.coeffs()[idx] / T::from_i64(k2).expect("wavevector")
        };
    }
    out
}

/// ξ̂₀·t + Σ_{k≠0} ξ̂_k/|k|² e_k on the grid.
pub fn build_gpam_lolli<T: Real>(noise: &GpamNoise<T>, t: T) -> GridField<T> {
    let tilde = Fft2::new(noise.lattice())
        .inverse(&tilde_lolli_hat(noise))
        .expect("matching lattice");
    let c = noise.zero_mode() * t;
    tilde.map(|v| v + c)
}

/// The lollipop as an exact affine-in-time series on the grid t0 + s·dt.
pub fn gpam_lolli_series<T: Real>(noise: &GpamNoise<T>, t0: T, dt: T, n_slices: usize) -> SpaceTimeSeries<T> {
    SpaceTimeSeries::Affine {
        base: build_gpam_lolli(noise, T::zero()),
        rate: noise.zero_mode(),
        t0,
        dt,
        n_slices,
    }
}

/// (2π)^{-2} Σ_{0<|k|≤1/ε} |k|^{-2} by lattice enumeration.
pub fn gpam_renorm_constant<T: Real>(reg: &RegularizationSpec<T>) -> T {
    let m = reg.k_max as i64;
    let mut acc = 0.0f64;
    for k1 in -m..=m {
        for k2 in -m..=m {
            let k = [k1, k2];
            if (k1, k2) != (0, 0) && reg.admits(k) {
                acc += 1.0 / (k1 * k1 + k2 * k2) as f64;
            }
        }
    }
    white_noise_variance::<T>() * T::lit(acc)
}
