use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::TorusLattice;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One time slice of a real field, row-major `values[i * n + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridField<T: Real> {
    lattice: TorusLattice,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn zeros(lattice: TorusLattice) -> Self {
        Self {
            lattice,
            values: vec![T::zero(); lattice.len()],
        }
    }

    pub fn constant(lattice: TorusLattice, c: T) -> Self {
        Self {
            lattice,
            values: vec![c; lattice.len()],
        }
    }

    pub fn from_values(lattice: TorusLattice, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidLattice(format!(
                "expected {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        Ok(Self { lattice, values })
    }

    /// Samples `f(x₁, x₂)` at the grid nodes.
    pub fn from_fn(lattice: TorusLattice, f: impl Fn(T, T) -> T) -> Self {
        let n = lattice.n();
        let h = lattice.spacing::<T>();
        let mut values = Vec::with_capacity(lattice.len());
        for i in 0..n {
            let x1 = h * T::from_usize_lossy(i);
            for j in 0..n {
                values.push(f(x1, h * T::from_usize_lossy(j)));
            }
        }
        Self { lattice, values }
    }

    #[inline]
    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.lattice.n() + j]
    }

    /// Periodic access with signed indices.
    #[inline]
    pub fn get_wrapped(&self, i: isize, j: isize) -> T {
        self.values[self.lattice.flat(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let n = self.lattice.n();
        self.values[i * n + j] = v;
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.lattice, other.lattice);
        Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: T, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Grid mean, the quadrature of (2π)^{-2}∫ u.
    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }

    /// Subsamples onto a coarser lattice whose nodes are a subset of these.
    pub fn restrict(&self, coarse: TorusLattice) -> Result<Self> {
        let n = self.lattice.n();
        let m = coarse.n();
        if m > n || n % m != 0 {
            return Err(Error::LatticeMismatch { expected: n, found: m });
        }
        let r = n / m;
        let mut out = GridField::zeros(coarse);
        for i in 0..m {
            for j in 0..m {
                out.set(i, j, self.get(i * r, j * r));
            }
        }
        Ok(out)
    }
}

/// Fourier coefficients in FFT order, û_k = (2π)^{-2}⟨u, e_{−k}⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T: Real> {
    lattice: TorusLattice,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(lattice: TorusLattice) -> Self {
        Self {
            lattice,
            coeffs: vec![Complex::new(T::zero(), T::zero()); lattice.len()],
        }
    }

    pub fn from_coeffs(lattice: TorusLattice, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::InvalidLattice(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        Ok(Self { lattice, coeffs })
    }

    #[inline]
    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// Coefficient of the signed wavevector k.
    #[inline]
    pub fn get(&self, k: [i64; 2]) -> Complex<T> {
        let n = self.lattice.n();
        self.coeffs[self.lattice.position(k[0]) * n + self.lattice.position(k[1])]
    }

    #[inline]
    pub fn set(&mut self, k: [i64; 2], v: Complex<T>) {
        let n = self.lattice.n();
        let idx = self.lattice.position(k[0]) * n + self.lattice.position(k[1]);
        self.coeffs[idx] = v;
    }

    /// Signed wavevector of flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        let n = self.lattice.n();
        [self.lattice.wavenumber(idx / n), self.lattice.wavenumber(idx % n)]
    }

    /// Largest Hermitian defect max |c(−k) − conj c(k)|.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for idx in 0..self.coeffs.len() {
            let k = self.wavevector(idx);
            let c = self.coeffs[idx];
            let d = self.get([-k[0], -k[1]]) - c.conj();
            worst = worst.max(d.norm());
        }
        worst
    }
}

/// Uniformly spaced sequence of slices starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpaceTimeField<T: Real> {
    t0: T,
    dt: T,
    slices: Vec<GridField<T>>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(t0: T, dt: T, slices: Vec<GridField<T>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::OutOfRange("a space-time field needs at least one slice".into()));
        }
        if !(dt > T::zero()) {
            return Err(Error::OutOfRange("time step must be positive".into()));
        }
        let lattice = slices[0].lattice();
        if let Some(bad) = slices.iter().find(|s| s.lattice() != lattice) {
            return Err(Error::LatticeMismatch {
                expected: lattice.n(),
                found: bad.lattice().n(),
            });
        }
        Ok(Self { t0, dt, slices })
    }

    #[inline]
    pub fn lattice(&self) -> TorusLattice {
        self.slices[0].lattice()
    }

    #[inline]
    pub fn t0(&self) -> T {
        self.t0
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    #[inline]
    pub fn time(&self, s: usize) -> T {
        self.t0 + self.dt * T::from_usize_lossy(s)
    }

    #[inline]
    pub fn t_end(&self) -> T {
        self.time(self.slices.len() - 1)
    }

    #[inline]
    pub fn slice(&self, s: usize) -> &GridField<T> {
        &self.slices[s]
    }

    pub fn slices(&self) -> &[GridField<T>] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<GridField<T>> {
        self.slices
    }

    pub fn sup_norm(&self) -> T {
        self.slices.iter().fold(T::zero(), |m, s| m.max(s.sup_norm()))
    }

    /// Slice index of time `t`, if `t` is a grid time.
    pub fn slice_index(&self, t: T) -> Option<usize> {
        let r = (t - self.t0) / self.dt;
        let s = r.round();
        if (r - s).abs() > T::lit(1e-6) || s < T::zero() {
            return None;
        }
        let s = s.to_usize()?;
        (s < self.slices.len()).then_some(s)
    }

    pub fn map(&self, f: impl Fn(T) -> T + Copy) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            slices: self.slices.iter().map(|s| s.map(f)).collect(),
        }
    }
}

/// Signed node of the space-time grid; spatial indices wrap periodically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridNode {
    pub s: isize,
    pub i: isize,
    pub j: isize,
}

impl GridNode {
    pub fn new(s: isize, i: isize, j: isize) -> Self {
        Self { s, i, j }
    }

    pub fn offset(self, ds: isize, di: isize, dj: isize) -> Self {
        Self::new(self.s + ds, self.i + di, self.j + dj)
    }
}

/// Space-time data on a uniform time grid: either stored slices or an
/// affine-in-time field `base + rate·t`, which is exact at every time.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceTimeSeries<T: Real> {
    Stored(SpaceTimeField<T>),
    Affine {
        base: GridField<T>,
        rate: T,
        t0: T,
        dt: T,
        n_slices: usize,
    },
}

impl<T: Real> SpaceTimeSeries<T> {
    pub fn time_constant(field: GridField<T>, t0: T, dt: T, n_slices: usize) -> Self {
        Self::Affine {
            base: field,
            rate: T::zero(),
            t0,
            dt,
            n_slices,
        }
    }

    pub fn lattice(&self) -> TorusLattice {
        match self {
            Self::Stored(f) => f.lattice(),
            Self::Affine { base, .. } => base.lattice(),
        }
    }

    pub fn t0(&self) -> T {
        match self {
            Self::Stored(f) => f.t0(),
            Self::Affine { t0, .. } => *t0,
        }
    }

    pub fn dt(&self) -> T {
        match self {
            Self::Stored(f) => f.dt(),
            Self::Affine { dt, .. } => *dt,
        }
    }

    pub fn n_slices(&self) -> usize {
        match self {
            Self::Stored(f) => f.len(),
            Self::Affine { n_slices, .. } => *n_slices,
        }
    }

    pub fn time(&self, s: usize) -> T {
        self.t0() + self.dt() * T::from_usize_lossy(s)
    }

    pub fn t_end(&self) -> T {
        self.time(self.n_slices() - 1)
    }

    /// Value at slice `s` and node (i, j) with periodic spatial wrap.
    #[inline]
    pub fn value(&self, s: usize, i: isize, j: isize) -> T {
        match self {
            Self::Stored(f) => f.slice(s).get_wrapped(i, j),
            Self::Affine {
                base, rate, t0, dt, ..
            } => base.get_wrapped(i, j) + *rate * (*t0 + *dt * T::from_usize_lossy(s)),
        }
    }

    /// Value at an arbitrary time inside the range, linear between slices.
    pub fn value_at_time(&self, t: T, i: isize, j: isize) -> T {
        match self {
            Self::Affine { base, rate, .. } => base.get_wrapped(i, j) + *rate * t,
            Self::Stored(f) => {
                let r = ((t - f.t0()) / f.dt()).max(T::zero());
                let last = f.len() - 1;
                let s0 = r.floor().to_usize().unwrap_or(0).min(last);
                let theta = r - T::from_usize_lossy(s0);
                let a = f.slice(s0).get_wrapped(i, j);
                if s0 == last || theta <= T::zero() {
                    return a;
                }
                let b = f.slice(s0 + 1).get_wrapped(i, j);
                a + theta * (b - a)
            }
        }
    }

    /// Slice at an arbitrary time, linear between stored slices.
    pub fn slice_at_time(&self, t: T) -> GridField<T> {
        match self {
            Self::Affine { base, rate, .. } => base.map(|v| v + *rate * t),
            Self::Stored(f) => {
                let r = ((t - f.t0()) / f.dt()).max(T::zero());
                let last = f.len() - 1;
                let s0 = r.floor().to_usize().unwrap_or(0).min(last);
                let theta = r - T::from_usize_lossy(s0);
                if s0 == last || theta <= T::zero() {
                    return f.slice(s0).clone();
                }
                f.slice(s0).zip_map(f.slice(s0 + 1), |a, b| a + theta * (b - a))
            }
        }
    }

    pub fn slice(&self, s: usize) -> GridField<T> {
        match self {
            Self::Stored(f) => f.slice(s).clone(),
            Self::Affine { .. } => self.slice_at_time(self.time(s)),
        }
    }

    /// Materializes every slice.
    pub fn to_field(&self) -> SpaceTimeField<T> {
        match self {
            Self::Stored(f) => f.clone(),
            Self::Affine { .. } => {
                let slices = (0..self.n_slices()).map(|s| self.slice(s)).collect();
                SpaceTimeField::new(self.t0(), self.dt(), slices).expect("non-empty series")
            }
        }
    }

    pub fn sup_norm(&self) -> T {
        match self {
            Self::Stored(f) => f.sup_norm(),
            Self::Affine { .. } => self
                .slice(0)
                .sup_norm()
                .max(self.slice(self.n_slices() - 1).sup_norm()),
        }
    }
}
