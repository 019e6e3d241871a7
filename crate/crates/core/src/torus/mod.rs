//! Discrete 2-torus, parabolic space-time geometry, fields and transforms.

mod dump;
mod fft;
mod field;

pub use dump::{read_dump, write_dump, DumpHeader};
pub use fft::{fft_forward, fft_inverse, Fft2};
pub use field::{GridField, GridNode, SpaceTimeField, SpaceTimeSeries, SpectralField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Spatial dimension of every lattice in the crate.
pub const DIM: usize = 2;

/// Uniform periodic lattice on (−π, π]², `n` points per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusLattice {
    n: usize,
}

impl TorusLattice {
    pub fn new(n_spatial: usize) -> Result<Self> {
        if n_spatial < 8 || n_spatial % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "n_spatial must be even and at least 8, got {n_spatial}"
            )));
        }
        Ok(Self { n: n_spatial })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing 2π/n.
    #[inline]
    pub fn spacing<T: Real>(&self) -> T {
        T::lit(std::f64::consts::TAU) / T::from_usize_lossy(self.n)
    }

    /// Index of the Nyquist wavenumber.
    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Signed wavenumber stored at FFT position `m`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> i64 {
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// FFT position of the signed wavenumber `k`.
    #[inline]
    pub fn position(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Coordinate of grid index `j`, reduced into (−π, π].
    #[inline]
    pub fn coordinate<T: Real>(&self, j: usize) -> T {
        wrap(self.spacing::<T>() * T::from_usize_lossy(j % self.n))
    }

    /// Flat row-major index of node (i, j) with periodic wrap.
    #[inline]
    pub fn flat(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        (i.rem_euclid(n) as usize) * self.n + j.rem_euclid(n) as usize
    }

    /// Grid index of a coordinate, or `None` when it is not a node.
    pub fn index_of<T: Real>(&self, x: T) -> Option<usize> {
        let h = self.spacing::<T>();
        let r = x / h;
        let j = r.round();
        if (r - j).abs() > T::lit(1e-6) {
            return None;
        }
        let j = j.to_i64()?;
        Some(j.rem_euclid(self.n as i64) as usize)
    }

    /// The point of the space-time grid `(t, i, j)` as a parabolic point.
    pub fn point<T: Real>(&self, t: T, i: usize, j: usize) -> ParabolicPoint<T> {
        ParabolicPoint::new(t, [self.coordinate(i), self.coordinate(j)])
    }
}

/// Reduces a coordinate into (−π, π].
#[inline]
pub fn wrap<T: Real>(x: T) -> T {
    let two_pi = T::lit(std::f64::consts::TAU);
    let pi = T::PI();
    let mut r = x % two_pi;
    if r > pi {
        r -= two_pi;
    } else if r <= -pi {
        r += two_pi;
    }
    r
}

/// Space-time point with spatial coordinates reduced into (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ParabolicPoint<T: Real> {
    pub t: T,
    pub x: [T; 2],
}

impl<T: Real> ParabolicPoint<T> {
    pub fn new(t: T, x: [T; 2]) -> Self {
        Self {
            t,
            x: [wrap(x[0]), wrap(x[1])],
        }
    }
}

/// Torus-minimal Euclidean distance between two spatial points.
pub fn torus_distance<T: Real>(x: [T; 2], y: [T; 2]) -> T {
    let a = wrap(x[0] - y[0]);
    let b = wrap(x[1] - y[1]);
    a.hypot(b)
}

/// max(√|t − s|, |x − y|) with the torus-minimal spatial distance.
pub fn parabolic_distance<T: Real>(z: &ParabolicPoint<T>, w: &ParabolicPoint<T>) -> T {
    (z.t - w.t).abs().sqrt().max(torus_distance(z.x, w.x))
}

/// Strict past ball: distance below `radius` and `query.t < center.t`.
pub fn in_past_ball<T: Real>(center: &ParabolicPoint<T>, radius: T, query: &ParabolicPoint<T>) -> bool {
    query.t < center.t && parabolic_distance(center, query) < radius
}
