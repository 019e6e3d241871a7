use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Smooth nonlinearity σ with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum Sigma<T: Real> {
    Zero,
    Constant(T),
    /// σ(u) = a·u; unbounded, accepted for oracle problems.
    Linear(T),
    /// σ(u) = sin(βu).
    Sin(T),
    /// σ(u) = cos(βu).
    Cos(T),
}

impl<T: Real> Sigma<T> {
    #[inline]
    pub fn value(&self, u: T) -> T {
        match *self {
            Self::Zero => T::zero(),
            Self::Constant(c) => c,
            Self::Linear(a) => a * u,
            Self::Sin(b) => (b * u).sin(),
            Self::Cos(b) => (b * u).cos(),
        }
    }

    #[inline]
    pub fn d1(&self, u: T) -> T {
        match *self {
            Self::Zero | Self::Constant(_) => T::zero(),
            Self::Linear(a) => a,
            Self::Sin(b) => b * (b * u).cos(),
            Self::Cos(b) => -b * (b * u).sin(),
        }
    }

    #[inline]
    pub fn d2(&self, u: T) -> T {
        match *self {
            Self::Zero | Self::Constant(_) | Self::Linear(_) => T::zero(),
            Self::Sin(b) => -b * b * (b * u).sin(),
            Self::Cos(b) => -b * b * (b * u).cos(),
        }
    }

    /// (σ, σ′) with one trigonometric evaluation.
    #[inline]
    pub fn value_d1(&self, u: T) -> (T, T) {
        match *self {
            Self::Sin(b) => {
                let (s, c) = (b * u).sin_cos();
                (s, b * c)
            }
            Self::Cos(b) => {
                let (s, c) = (b * u).sin_cos();
                (c, -b * s)
            }
            _ => (self.value(u), self.d1(u)),
        }
    }

    /// σ′σ.
    #[inline]
    pub fn d1_times_value(&self, u: T) -> T {
        self.d1(u) * self.value(u)
    }

    /// max{|σ|, |σ′|, |σ″|} sampled on 10⁴ points of [−10, 10].
    pub fn sampled_bound(&self) -> T {
        const POINTS: usize = 10_000;
        let mut m = T::zero();
        for k in 0..POINTS {
            let u = T::lit(-10.0 + 20.0 * k as f64 / (POINTS - 1) as f64);
            m = m.max(self.value(u).abs()).max(self.d1(u).abs()).max(self.d2(u).abs());
        }
        m
    }

    /// Whether the sampled bound stays within `c_sigma`; `Linear` fails
    /// for any finite constant once |a|·10 exceeds it.
    pub fn satisfies_bound(&self, c_sigma: T) -> bool {
        self.sampled_bound() <= c_sigma
    }
}
