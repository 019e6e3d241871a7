//! Dense space-time boxes in offsets relative to a base node, with separable
//! past-looking correlations.

use super::discrete::DiscreteKernel;
use crate::scalar::Real;

/// Values on s ∈ [lo₀, hi₀], i ∈ [lo₁, hi₁], j ∈ [lo₂, hi₂] (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct Box3<T: Real> {
    lo: [isize; 3],
    hi: [isize; 3],
    data: Vec<T>,
}

impl<T: Real> Box3<T> {
    pub fn from_fn(lo: [isize; 3], hi: [isize; 3], f: impl Fn(isize, isize, isize) -> T) -> Self {
        let mut data = Vec::with_capacity(Self::volume(lo, hi));
        for s in lo[0]..=hi[0] {
            for i in lo[1]..=hi[1] {
                for j in lo[2]..=hi[2] {
                    data.push(f(s, i, j));
                }
            }
        }
        Self { lo, hi, data }
    }

    fn volume(lo: [isize; 3], hi: [isize; 3]) -> usize {
        (0..3).map(|a| (hi[a] - lo[a] + 1).max(0) as usize).product()
    }

    pub fn lo(&self) -> [isize; 3] {
        self.lo
    }

    pub fn hi(&self) -> [isize; 3] {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn index(&self, s: isize, i: isize, j: isize) -> usize {
        let ni = (self.hi[1] - self.lo[1] + 1) as usize;
        let nj = (self.hi[2] - self.lo[2] + 1) as usize;
        ((s - self.lo[0]) as usize * ni + (i - self.lo[1]) as usize) * nj + (j - self.lo[2]) as usize
    }

    pub fn contains(&self, s: isize, i: isize, j: isize) -> bool {
        (self.lo[0]..=self.hi[0]).contains(&s) && (self.lo[1]..=self.hi[1]).contains(&i) && (self.lo[2]..=self.hi[2]).contains(&j)
    }

    #[inline]
    pub fn get(&self, s: isize, i: isize, j: isize) -> T {
        debug_assert!(self.contains(s, i, j));
        self.data[self.index(s, i, j)]
    }

    /// Pointwise combination on the common sub-box.
    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let lo = [0, 1, 2].map(|a| self.lo[a].max(other.lo[a]));
        let hi = [0, 1, 2].map(|a| self.hi[a].min(other.hi[a]));
        Self::from_fn(lo, hi, |s, i, j| f(self.get(s, i, j), other.get(s, i, j)))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            lo: self.lo,
            hi: self.hi,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// (K ⋆ f)(p) = Σ_{q,a,b} K(−q, a, b)·f(p + (−q, a, b)), on the sub-box
    /// where every referenced value exists.
    pub fn correlate(&self, k: &DiscreteKernel<T>) -> Self {
        let mt = k.time_len() as isize - 1;
        let r = [k.radius(0) as isize, k.radius(1) as isize];
        // time pass
        let lo_t = [self.lo[0] + mt, self.lo[1], self.lo[2]];
        let pass_t = Self::from_fn(lo_t, self.hi, |s, i, j| {
            k.time
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (q, &w)| acc + w * self.get(s - q as isize, i, j))
        });
        let lo_x = [lo_t[0], lo_t[1] + r[0], lo_t[2]];
        let hi_x = [self.hi[0], self.hi[1] - r[0], self.hi[2]];
        let pass_x = Self::from_fn(lo_x, hi_x, |s, i, j| {
            k.space[0]
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (a, &w)| acc + w * pass_t.get(s, i + a as isize - r[0], j))
        });
        let lo_y = [lo_x[0], lo_x[1], lo_x[2] + r[1]];
        let hi_y = [hi_x[0], hi_x[1], hi_x[2] - r[1]];
        Self::from_fn(lo_y, hi_y, |s, i, j| {
            k.space[1]
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (b, &w)| acc + w * pass_x.get(s, i, j + b as isize - r[1]))
        })
    }
}
