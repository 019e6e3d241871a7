use num_complex::Complex;

use super::rng::{mode_key, normal, stream, Purpose};
use super::{white_noise_variance, RegularizationSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::{Fft2, GridField, SpaceTimeField, SpectralField, TorusLattice};

/// c_k² = (2π)^{−d}(1+|k|²)^{−(d/2−δ)} with d = 2.
pub fn wiener_ck_sq<T: Real>(delta: T, k: [i64; 2]) -> T {
    let k2 = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
    white_noise_variance::<T>() * (T::one() + k2).powf(-(T::one() - delta))
}

/// Increments c_k ΔB_k per step together with the matching stochastic
/// convolutions c_k ∫ e^{−|k|²(t+dt−s)} dB_k, sampled jointly.
#[derive(Debug, Clone)]
pub struct WienerNoise<T: Real> {
    pub lattice: TorusLattice,
    pub delta: T,
    pub dt: T,
    pub reg: RegularizationSpec<T>,
    pub seed: u64,
    pub realization: u64,
    pub increments: Vec<SpectralField<T>>,
    pub convolutions: Vec<SpectralField<T>>,
    /// Stationary initial lollipop, zero on the zero mode.
    pub eta: SpectralField<T>,
}

impl<T: Real> WienerNoise<T> {
    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    /// ΔW on the grid for step `s`.
    pub fn increment_field(&self, fft: &Fft2<T>, s: usize) -> GridField<T> {
        fft.inverse(&self.increments[s]).expect("matching lattice")
    }
}

pub fn sample_wiener_noise<T: Real>(
    lattice: TorusLattice,
    delta: T,
    dt: T,
    n_steps: usize,
    reg: RegularizationSpec<T>,
    seed: u64,
) -> Result<WienerNoise<T>> {
    sample_wiener_noise_realization(lattice, delta, dt, n_steps, reg, seed, 0)
}

pub fn sample_wiener_noise_realization<T: Real>(
    lattice: TorusLattice,
    delta: T,
    dt: T,
    n_steps: usize,
    reg: RegularizationSpec<T>,
    seed: u64,
    realization: u64,
) -> Result<WienerNoise<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::OutOfRange(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(dt > T::zero()) {
        return Err(Error::OutOfRange("dt must be positive".into()));
    }
    reg.validate(lattice)?;
    let nyq = lattice.nyquist() as i64;
    let mut increments = vec![SpectralField::zeros(lattice); n_steps];
    let mut convolutions = vec![SpectralField::zeros(lattice); n_steps];
    let mut eta = SpectralField::zeros(lattice);
    let two = T::lit(2.0);
    for k in reg.canonical_modes() {
        let mut rng = stream(seed, realization, Purpose::Wiener, mode_key(k));
        let ck = wiener_ck_sq(delta, k).sqrt();
        let lambda = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
        let real = (k[0] == 0 || k[0].abs() == nyq) && (k[1] == 0 || k[1].abs() == nyq);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Complex<T> {
            if real {
                Complex::new(normal::<T>(rng), T::zero())
            } else {
                let s = T::one() / two.sqrt();
                Complex::new(normal::<T>(rng) * s, normal::<T>(rng) * s)
            }
        };
        // Var ΔB = dt, Var I = (1−e^{−2λdt})/(2λ), Cov = (1−e^{−λdt})/λ
        let (var_i, cov) = if k == [0, 0] {
            (dt, dt)
        } else {
            (
                -(-two * lambda * dt).exp_m1() / (two * lambda),
                -(-lambda * dt).exp_m1() / lambda,
            )
        };
        let resid_sd = (var_i - cov * cov / dt).max(T::zero()).sqrt();
        if k != [0, 0] {
            let g = draw(&mut rng);
            let v = g * (ck / (two * lambda).sqrt());
            eta.set(k, v);
            if !real {
                eta.set([-k[0], -k[1]], v.conj());
            }
        }
        for s in 0..n_steps {
            let db = draw(&mut rng) * dt.sqrt();
            let di = db * (cov / dt) + draw(&mut rng) * resid_sd;
            let (a, b) = (db * ck, di * ck);
            increments[s].set(k, a);
            convolutions[s].set(k, b);
            if !real {
                increments[s].set([-k[0], -k[1]], a.conj());
                convolutions[s].set([-k[0], -k[1]], b.conj());
            }
        }
    }
    Ok(WienerNoise {
        lattice,
        delta,
        dt,
        reg,
        seed,
        realization,
        increments,
        convolutions,
        eta,
    })
}

/// Spectral lollipop states at every step: ẑ(0) = η, then the exact OU update.
pub fn wiener_lolli_spectral<T: Real>(noise: &WienerNoise<T>) -> Vec<SpectralField<T>> {
    let n = noise.lattice.n();
    let decay: Vec<T> = (0..noise.lattice.len())
        .map(|idx| {
            let k = [noise.lattice.wavenumber(idx / n), noise.lattice.wavenumber(idx % n)];
            let lambda = T::from_i64(k[0] * k[0] + k[1] * k[1]).expect("wavevector");
            (-lambda * noise.dt).exp()
        })
        .collect();
    let mut z = noise.eta.clone();
    let mut out = Vec::with_capacity(noise.n_steps() + 1);
    out.push(z.clone());
    for s in 0..noise.n_steps() {
        for (idx, c) in z.coeffs_mut().iter_mut().enumerate() {
            *c = *c * decay[idx] + noise.convolutions[s].coeffs()[idx];
        }
        out.push(z.clone());
    }
    out
}

pub fn build_wiener_lolli<T: Real>(noise: &WienerNoise<T>) -> SpaceTimeField<T> {
    let fft = Fft2::new(noise.lattice);
    let slices = wiener_lolli_spectral(noise)
        .iter()
        .map(|s| fft.inverse(s).expect("matching lattice"))
        .collect();
    SpaceTimeField::new(T::zero(), noise.dt, slices).expect("non-empty")
}

/// (2π)^{−d} Σ_{0<|k|≤1/ε} c_k².
pub fn wiener_renorm_constant<T: Real>(delta: T, reg: &RegularizationSpec<T>) -> T {
    let m = reg.k_max as i64;
    let mut acc = T::zero();
    for k1 in -m..=m {
        for k2 in -m..=m {
            if (k1, k2) != (0, 0) && reg.admits([k1, k2]) {
                acc += wiener_ck_sq(delta, [k1, k2]);
            }
        }
    }
    white_noise_variance::<T>() * acc
}

