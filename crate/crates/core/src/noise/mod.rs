//! Noise families at regularization scale ε together with their lollipops
//! and renormalization constants.

mod gpam;
pub mod rng;
mod sine_gordon;
mod wiener;

pub use gpam::{build_gpam_lolli, gpam_lolli_series, gpam_renorm_constant, sample_gpam_noise, sample_gpam_noise_realization, GpamNoise};
pub use sine_gordon::{estimate_sg_renorm, sample_sg_noise, sample_sg_noise_realization, sg_max_beta_sq, RenormEstimate, SgNoiseSpec, SgStream, SineGordonNoise};
pub use wiener::{build_wiener_lolli, sample_wiener_noise, sample_wiener_noise_realization, wiener_ck_sq, wiener_lolli_spectral, wiener_renorm_constant, WienerNoise};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::{Fft2, GridField, SpectralField, TorusLattice};

/// Ultraviolet cutoff: modes with |k| ≤ 1/ε are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RegularizationSpec<T: Real> {
    pub epsilon: T,
    pub k_max: usize,
    pub time_mollifier_width: T,
}

impl<T: Real> RegularizationSpec<T> {
    /// Any ε > 0; ε > 1 leaves only the zero mode.
    pub fn new(epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
        }
        let k_max = (T::one() / epsilon + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        Ok(Self {
            epsilon,
            k_max,
            time_mollifier_width: T::zero(),
        })
    }

    /// Cutoff inside the dealiasing band, k_max = n/3 and ε = 3/n.
    pub fn for_grid(lattice: TorusLattice) -> Self {
        let eps = T::lit(3.0) / T::from_usize_lossy(lattice.n());
        Self::new(eps).expect("positive epsilon")
    }

    pub fn with_time_mollifier(mut self, width: T) -> Self {
        self.time_mollifier_width = width;
        self
    }

    /// Fails when the cutoff is not representable on `lattice`.
    pub fn validate(&self, lattice: TorusLattice) -> Result<()> {
        if self.k_max > lattice.nyquist() {
            return Err(Error::CutoffExceedsNyquist {
                k_max: self.k_max,
                nyquist: lattice.nyquist(),
            });
        }
        Ok(())
    }

    /// |k| ≤ 1/ε.
    #[inline]
    pub fn admits(&self, k: [i64; 2]) -> bool {
        let r = T::one() / self.epsilon;
        let k2 = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
        k2 <= r * r * (T::one() + T::lit(1e-12))
    }

    /// Every admitted wavevector, canonical representatives only.
    pub fn canonical_modes(&self) -> Vec<[i64; 2]> {
        let m = self.k_max as i64;
        let mut out = Vec::new();
        for k1 in 0..=m {
            for k2 in -m..=m {
                let k = [k1, k2];
                if rng::is_canonical(k) && self.admits(k) {
                    out.push(k);
                }
            }
        }
        out
    }
}

/// (2π)^{-2}, the variance of one Fourier coefficient of white noise.
pub fn white_noise_variance<T: Real>() -> T {
    let tau = T::lit(std::f64::consts::TAU);
    T::one() / (tau * tau)
}

/// Heat-equation residual ‖(∂_t − Δ)l − f‖∞ from two slices `l1`, `l2`
/// separated by `dt`, using the forward difference in time mode by mode and
/// the exact slope `rate` of the zero mode when provided.
pub fn lollipop_residual<T: Real>(
    l1: &GridField<T>,
    l2: &GridField<T>,
    dt: T,
    forcing: &GridField<T>,
) -> Result<T> {
    let fft = Fft2::new(l1.lattice());
    let a = fft.forward(l1)?;
    let b = fft.forward(l2)?;
    let f = fft.forward(forcing)?;
    let mut res = SpectralField::zeros(l1.lattice());
    for idx in 0..a.coeffs().len() {
        let k = a.wavevector(idx);
        let k2 = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
        let dtl = (b.coeffs()[idx] - a.coeffs()[idx]) / dt;
        res.coeffs_mut()[idx] = dtl + a.coeffs()[idx] * k2 - f.coeffs()[idx];
    }
    let phys = fft.inverse(&res)?;
    Ok(phys.sup_norm())
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}
