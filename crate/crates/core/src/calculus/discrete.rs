//! Grid tabulations of scaled kernels and the semigroup ladder.
//!
//! Weights of the one-dimensional profiles sum to one at every scale. A
//! profile covering at least three interior nodes is sampled at the nodes
//! (trapezoid rule, spectrally accurate on band-limited fields); narrower
//! profiles use hat-function moments w_j = ∫ hat(y/Δ − j) P(y) dy, which
//! degenerate to a point mass below the grid spacing.

use serde::{Deserialize, Serialize};

use super::kernel::MollifierKernel;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::torus::{GridNode, SpaceTimeSeries};

/// Deepest semigroup level supported.
pub const DEPTH_CAP: usize = 5;

/// Interior nodes needed before a profile is sampled pointwise.
const NODAL_MIN: usize = 3;

/// Normalized weights of the density `p` supported in [lo, hi] on the nodes
/// jΔ; returns the weights and the index of the first node.
fn profile_weights(p: impl Fn(f64) -> f64, lo: f64, hi: f64, spacing: f64) -> (Vec<f64>, i64) {
    let first = (lo / spacing).floor() as i64;
    let last = (hi / spacing).ceil() as i64;
    let w: Vec<f64> = (first..=last).map(|j| p(j as f64 * spacing)).collect();
    if w.iter().filter(|&&v| v > 0.0).count() < NODAL_MIN {
        return hat_weights(p, lo, hi, spacing);
    }
    let total: f64 = w.iter().sum();
    (w.into_iter().map(|v| v / total).collect(), first)
}

/// Hat-function moments of the density `p` supported in [lo, hi] on the
/// nodes jΔ; returns the weights and the index of the first node.
fn hat_weights(p: impl Fn(f64) -> f64, lo: f64, hi: f64, spacing: f64) -> (Vec<f64>, i64) {
    let first = (lo / spacing).floor() as i64;
    let last = (hi / spacing).ceil() as i64;
    let mut w = vec![0.0; (last - first + 1) as usize];
    let panels = ((64.0 * (hi - lo) / spacing).ceil() as usize).clamp(4096, 1 << 21);
    let step = (hi - lo) / panels as f64;
    for m in 0..=panels {
        let y = lo + step * m as f64;
        let q = if m == 0 || m == panels { 0.5 } else { 1.0 } * step * p(y);
        if q == 0.0 {
            continue;
        }
        let r = y / spacing;
        let j = r.floor();
        let frac = r - j;
        let idx = (j as i64 - first) as usize;
        w[idx] += q * (1.0 - frac);
        if frac > 0.0 {
            w[idx + 1] += q * frac;
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    (w, first)
}

/// Separable grid kernel: weight `time[q]` sits at time offset −q·dt and
/// `space[a][r_a + i]` at spatial offset i·h along axis a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiscreteKernel<T: Real> {
    pub time: Vec<T>,
    pub space: [Vec<T>; 2],
    pub dt: T,
    pub h: T,
}

impl<T: Real> DiscreteKernel<T> {
    /// Point mass at the origin.
    pub fn delta(dt: T, h: T) -> Self {
        Self {
            time: vec![T::one()],
            space: [vec![T::one()], vec![T::one()]],
            dt,
            h,
        }
    }

    /// Tabulates ψ^L on a grid with steps (dt, h).
    pub fn from_mollifier(psi: &MollifierKernel, scale: f64, dt: T, h: T) -> Self {
        let (dtf, hf) = (dt.as_f64(), h.as_f64());
        let (tw, first) = profile_weights(
            |tau| psi.time_density(scale, tau),
            -psi.width * scale * scale,
            0.0,
            dtf,
        );
        // node index first..=0 maps to q = −index
        let time: Vec<T> = (0..tw.len()).rev().map(|k| T::lit(tw[k])).collect();
        debug_assert_eq!(first + tw.len() as i64 - 1, 0);
        let space = [0, 1].map(|a| {
            let r = psi.radii[a] * scale;
            let (w, first) = profile_weights(|y| psi.space_density(a, scale, y), -r, r, hf);
            let half = (-first) as usize;
            let len = 2 * half + 1;
            // symmetrize and center
            let mut out = vec![0.0; len];
            for (k, &v) in w.iter().enumerate() {
                let off = first + k as i64;
                out[(off + half as i64) as usize] += 0.5 * v;
                out[(half as i64 - off) as usize] += 0.5 * v;
            }
            out.into_iter().map(T::lit).collect::<Vec<T>>()
        });
        Self { time, space, dt, h }
    }

    /// Number of time slices touched, counting the base point.
    pub fn time_len(&self) -> usize {
        self.time.len()
    }

    pub fn radius(&self, axis: usize) -> usize {
        (self.space[axis].len() - 1) / 2
    }

    /// Σ weights.
    pub fn mass(&self) -> T {
        self.time.iter().copied().sum::<T>() * self.space[0].iter().copied().sum::<T>() * self.space[1].iter().copied().sum::<T>()
    }

    /// Weight at offset (−q, i, j).
    pub fn weight(&self, q: usize, i: isize, j: isize) -> T {
        let (r0, r1) = (self.radius(0) as isize, self.radius(1) as isize);
        if q >= self.time.len() || i.abs() > r0 || j.abs() > r1 {
            return T::zero();
        }
        self.time[q] * self.space[0][(i + r0) as usize] * self.space[1][(j + r1) as usize]
    }

    /// Largest weight divided by the cell volume, the grid analogue of ‖φ‖∞.
    pub fn sup_density(&self) -> T {
        let m = |v: &Vec<T>| v.iter().copied().fold(T::zero(), T::max);
        m(&self.time) * m(&self.space[0]) * m(&self.space[1]) / (self.dt * self.h * self.h)
    }

    /// Discrete convolution; supports add.
    pub fn convolve(&self, other: &Self) -> Self {
        let conv = |a: &[T], b: &[T]| {
            let mut out = vec![T::zero(); a.len() + b.len() - 1];
            for (i, &x) in a.iter().enumerate() {
                for (j, &y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        };
        Self {
            time: conv(&self.time, &other.time),
            space: [conv(&self.space[0], &other.space[0]), conv(&self.space[1], &other.space[1])],
            dt: self.dt,
            h: self.h,
        }
    }

    /// Largest pointwise difference of two tabulations.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let q = self.time.len().max(other.time.len());
        let r0 = self.radius(0).max(other.radius(0)) as isize;
        let r1 = self.radius(1).max(other.radius(1)) as isize;
        let mut worst = T::zero();
        for s in 0..q {
            for i in -r0..=r0 {
                for j in -r1..=r1 {
                    worst = worst.max((self.weight(s, i, j) - other.weight(s, i, j)).abs());
                }
            }
        }
        worst
    }

    /// Σ_{q,i,j} w(−q, i, j)·f(node + (−q, i, j)).
    pub fn apply(&self, node: GridNode, f: impl Fn(isize, isize, isize) -> T) -> T {
        let (r0, r1) = (self.radius(0) as isize, self.radius(1) as isize);
        let mut acc = T::zero();
        for (q, &wt) in self.time.iter().enumerate() {
            if wt == T::zero() {
                continue;
            }
            let s = node.s - q as isize;
            let mut slab = T::zero();
            for (a, &wx) in self.space[0].iter().enumerate() {
                let i = node.i + a as isize - r0;
                let mut row = T::zero();
                for (b, &wy) in self.space[1].iter().enumerate() {
                    row += wy * f(s, i, node.j + b as isize - r1);
                }
                slab += wx * row;
            }
            acc += wt * slab;
        }
        acc
    }

    /// Pairing ⟨f, φ_z⟩ with a series at grid node `node`.
    pub fn pair(&self, series: &SpaceTimeSeries<T>, node: GridNode) -> Result<T> {
        self.check_support(series, node)?;
        Ok(self.apply(node, |s, i, j| series.value(s as usize, i, j)))
    }

    /// Fails when the kernel reaches before the first slice or past the last.
    pub fn check_support(&self, series: &SpaceTimeSeries<T>, node: GridNode) -> Result<()> {
        let earliest = node.s - (self.time.len() as isize - 1);
        if earliest < 0 || node.s >= series.n_slices() as isize {
            let t = series.t0() + series.dt() * T::lit(earliest as f64);
            return Err(Error::KernelOutsideDomain { t: t.as_f64() });
        }
        Ok(())
    }
}

/// φ^{L,n} tabulated on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SemigroupKernel<T: Real> {
    pub base: MollifierKernel,
    pub scale: f64,
    pub depth: usize,
    pub tabulation: DiscreteKernel<T>,
}

/// φ^{L,n} = ψ^{L/2} ∗ … ∗ ψ^{L/2ⁿ}.
pub fn semigroup_kernel<T: Real>(psi: &MollifierKernel, scale: f64, depth: usize, dt: T, h: T) -> Result<SemigroupKernel<T>> {
    if depth == 0 {
        return Err(Error::OutOfRange("semigroup depth must be at least 1".into()));
    }
    let ladder = SemigroupLadder::new(psi, scale, depth, dt, h)?;
    Ok(SemigroupKernel {
        base: *psi,
        scale,
        depth,
        tabulation: ladder.head(depth),
    })
}

/// The factors ψ^{L/2^j}, j = 1..=D, of the semigroup kernel at scale L.
///
/// φ^{L,n} is the product of factors 1..=n and φ^{L/2ⁿ} the product of
/// factors n+1..=D, so φ^L = φ^{L,n} ∗ φ^{L/2ⁿ} holds exactly on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SemigroupLadder<T: Real> {
    pub base: MollifierKernel,
    pub scale: f64,
    pub factors: Vec<DiscreteKernel<T>>,
    dt: T,
    h: T,
}

impl<T: Real> SemigroupLadder<T> {
    pub fn new(psi: &MollifierKernel, scale: f64, depth: usize, dt: T, h: T) -> Result<Self> {
        if depth > DEPTH_CAP {
            return Err(Error::DepthCap { depth, cap: DEPTH_CAP });
        }
        if !(scale > 0.0) {
            return Err(Error::OutOfRange(format!("scale must be positive, got {scale}")));
        }
        let factors = (1..=depth)
            .map(|j| DiscreteKernel::from_mollifier(psi, scale / f64::from(1u32 << j), dt, h))
            .collect();
        Ok(Self {
            base: *psi,
            scale,
            factors,
            dt,
            h,
        })
    }

    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    /// Factors resolved by at least two grid cells in space.
    pub fn resolved_depth(&self) -> usize {
        let two_h = 2.0 * self.h.as_f64();
        (1..=self.depth())
            .take_while(|&j| self.scale / f64::from(1u32 << j) >= two_h)
            .count()
    }

    fn product(&self, range: std::ops::Range<usize>) -> DiscreteKernel<T> {
        range.fold(DiscreteKernel::delta(self.dt, self.h), |acc, j| acc.convolve(&self.factors[j]))
    }

    /// ψ^{L/2^j}.
    pub fn factor(&self, j: usize) -> &DiscreteKernel<T> {
        &self.factors[j - 1]
    }

    /// φ^{L,n}; φ^{L,0} is the point mass.
    pub fn head(&self, n: usize) -> DiscreteKernel<T> {
        self.product(0..n)
    }

    /// φ^{L/2ⁿ}, truncated at the ladder depth.
    pub fn tail(&self, n: usize) -> DiscreteKernel<T> {
        self.product(n..self.depth())
    }

    /// φ^L.
    pub fn full(&self) -> DiscreteKernel<T> {
        self.tail(0)
    }
}
