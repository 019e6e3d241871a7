//! Base-point-indexed realizations Π_z of the five symbols built from a
//! smooth regularized noise.

use serde::{Deserialize, Serialize};

use crate::calculus::{DiscreteKernel, GridGeometry};
use crate::error::{Error, Result};
use crate::noise::{gpam_lolli_series, gpam_renorm_constant, GpamNoise};
use crate::scalar::Real;
use crate::solver::heat_residual;
use crate::torus::{GridNode, ParabolicPoint, SpaceTimeField, SpaceTimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolTag {
    Noise,
    Lolli,
    X,
    XNoise,
    Dumbbell,
}

/// A symbol with its noise decoration: `i` selects the noise, `j` the
/// lollipop of a dumbbell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub tag: SymbolTag,
    pub i: usize,
    pub j: usize,
}

impl Symbol {
    pub const NOISE: Self = Self::plain(SymbolTag::Noise);
    pub const LOLLI: Self = Self::plain(SymbolTag::Lolli);
    pub const X: Self = Self::plain(SymbolTag::X);
    pub const XNOISE: Self = Self::plain(SymbolTag::XNoise);
    pub const DUMBBELL: Self = Self::plain(SymbolTag::Dumbbell);

    pub const fn plain(tag: SymbolTag) -> Self {
        Self { tag, i: 0, j: 0 }
    }

    pub const fn decorated(tag: SymbolTag, i: usize, j: usize) -> Self {
        Self { tag, i, j }
    }

    /// |τ|: −1−κ, 1−κ, 1, −κ, −2κ.
    pub fn homogeneity<T: Real>(&self, kappa: T) -> T {
        match self.tag {
            SymbolTag::Noise => -T::one() - kappa,
            SymbolTag::Lolli => T::one() - kappa,
            SymbolTag::X => T::one(),
            SymbolTag::XNoise => -kappa,
            SymbolTag::Dumbbell => -T::lit(2.0) * kappa,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.tag {
            SymbolTag::Noise => "NOISE",
            SymbolTag::Lolli => "LOLLI",
            SymbolTag::X => "X",
            SymbolTag::XNoise => "XNOISE",
            SymbolTag::Dumbbell => "DUMBBELL",
        }
    }
}

/// Scalar or vector value of a realized symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum Realized<T: Real> {
    Scalar(T),
    Vector([T; 2]),
}

impl<T: Real> Realized<T> {
    /// |v| for scalars, max component for vectors.
    pub fn magnitude(&self) -> T {
        match *self {
            Self::Scalar(v) => v.abs(),
            Self::Vector([a, b]) => a.abs().max(b.abs()),
        }
    }

    pub fn scalar(&self) -> Option<T> {
        match *self {
            Self::Scalar(v) => Some(v),
            Self::Vector(_) => None,
        }
    }

    pub fn vector(&self) -> Option<[T; 2]> {
        match *self {
            Self::Scalar(_) => None,
            Self::Vector(v) => Some(v),
        }
    }
}

/// A realized symbol over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization<T: Real> {
    Scalar(SpaceTimeField<T>),
    Vector([SpaceTimeField<T>; 2]),
}

/// Noises \<0b>_i, lollipops \<1b>_i on a common grid, and the matrix C_{i,j}.
#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    pub noises: Vec<SpaceTimeSeries<T>>,
    pub lollis: Vec<SpaceTimeSeries<T>>,
    pub renorm: Vec<Vec<T>>,
    pub kappa: T,
}

impl<T: Real> Model<T> {
    pub fn new(noises: Vec<SpaceTimeSeries<T>>, lollis: Vec<SpaceTimeSeries<T>>, renorm: Vec<Vec<T>>, kappa: T) -> Result<Self> {
        let m = noises.len();
        if m == 0 || lollis.len() != m {
            return Err(Error::OutOfRange("need one lollipop per noise and at least one noise".into()));
        }
        if renorm.len() != m || renorm.iter().any(|r| r.len() != m) {
            return Err(Error::OutOfRange(format!("renormalization matrix must be {m}x{m}")));
        }
        if !(kappa > T::zero() && kappa < T::one() / T::lit(3.0)) {
            return Err(Error::OutOfRange(format!("kappa must lie in (0, 1/3), got {kappa}")));
        }
        let geo = GridGeometry::of(&noises[0]);
        for s in noises.iter().chain(&lollis) {
            let g = GridGeometry::of(s);
            if g.lattice != geo.lattice {
                return Err(Error::LatticeMismatch {
                    expected: geo.lattice.n(),
                    found: g.lattice.n(),
                });
            }
            if g.n_slices != geo.n_slices || (g.t0 - geo.t0).abs() > geo.dt * T::lit(1e-9) || (g.dt - geo.dt).abs() > geo.dt * T::lit(1e-9) {
                return Err(Error::TimeRange("noises and lollipops must share one time grid".into()));
            }
        }
        Ok(Self {
            noises,
            lollis,
            renorm,
            kappa,
        })
    }

    /// The gPAM model on slices t0 + s·dt with C = C^(ε) by lattice sum.
    pub fn gpam(noise: &GpamNoise<T>, t0: T, dt: T, n_slices: usize, kappa: T) -> Result<Self> {
        let xi = SpaceTimeSeries::time_constant(noise.field(), t0, dt, n_slices);
        let lolli = gpam_lolli_series(noise, t0, dt, n_slices);
        let c = gpam_renorm_constant(&noise.reg);
        Self::new(vec![xi], vec![lolli], vec![vec![c]], kappa)
    }

    pub fn n_noises(&self) -> usize {
        self.noises.len()
    }

    pub fn geometry(&self) -> GridGeometry<T> {
        GridGeometry::of(&self.noises[0])
    }

    /// Grid node of a point, failing off the grid.
    pub fn node_of(&self, z: &ParabolicPoint<T>) -> Result<GridNode> {
        let geo = self.geometry();
        let r = (z.t - geo.t0) / geo.dt;
        let s = r.round();
        let i = geo.lattice.index_of(z.x[0]);
        let j = geo.lattice.index_of(z.x[1]);
        match (i, j) {
            (Some(i), Some(j)) if (r - s).abs() < T::lit(1e-6) && s >= T::zero() && s < T::from_usize_lossy(geo.n_slices) => {
                Ok(GridNode::new(s.to_isize().unwrap_or(0), i as isize, j as isize))
            }
            _ => Err(Error::OffGrid(format!("(t = {}, x = ({}, {}))", z.t, z.x[0], z.x[1]))),
        }
    }

    /// Largest discrete heat-operator residual of the lollipops.
    pub fn lolli_residual(&self) -> Result<T> {
        let mut worst = T::zero();
        for (l, xi) in self.lollis.iter().zip(&self.noises) {
            worst = worst.max(heat_residual(l, xi, T::zero())?);
        }
        Ok(worst)
    }

    #[inline]
    fn noise(&self, i: usize, w: GridNode) -> T {
        self.noises[i].value(w.s as usize, w.i, w.j)
    }

    #[inline]
    fn lolli(&self, i: usize, w: GridNode) -> T {
        self.lollis[i].value(w.s as usize, w.i, w.j)
    }

    /// Torus-minimal x(w) − x(z).
    #[inline]
    fn x_diff(&self, z: GridNode, w: GridNode) -> [T; 2] {
        let geo = self.geometry();
        let h = geo.h();
        [
            T::lit(geo.wrap_index(w.i - z.i) as f64) * h,
            T::lit(geo.wrap_index(w.j - z.j) as f64) * h,
        ]
    }

    /// (Π_z τ)(w).
    pub fn value(&self, z: GridNode, w: GridNode, symbol: Symbol) -> Realized<T> {
        let (i, j) = (symbol.i, symbol.j);
        match symbol.tag {
            SymbolTag::Noise => Realized::Scalar(self.noise(i, w)),
            SymbolTag::Lolli => Realized::Scalar(self.lolli(i, w) - self.lolli(i, z)),
            SymbolTag::X => Realized::Vector(self.x_diff(z, w)),
            SymbolTag::XNoise => {
                let x = self.x_diff(z, w);
                let xi = self.noise(i, w);
                Realized::Vector([x[0] * xi, x[1] * xi])
            }
            SymbolTag::Dumbbell => Realized::Scalar((self.lolli(j, w) - self.lolli(j, z)) * self.noise(i, w) - self.renorm[i][j]),
        }
    }

    fn check_symbol(&self, symbol: Symbol) -> Result<()> {
        if symbol.i >= self.n_noises() || symbol.j >= self.n_noises() {
            return Err(Error::OutOfRange(format!("decoration ({}, {}) exceeds {} noises", symbol.i, symbol.j, self.n_noises())));
        }
        Ok(())
    }

    /// Π_z τ over the whole grid.
    pub fn realize(&self, z: &ParabolicPoint<T>, symbol: Symbol) -> Result<Realization<T>> {
        self.check_symbol(symbol)?;
        let zn = self.node_of(z)?;
        let geo = self.geometry();
        let n = geo.lattice.n();
        let build = |comp: usize| -> Result<SpaceTimeField<T>> {
            let slices = (0..geo.n_slices)
                .map(|s| {
                    crate::torus::GridField::from_values(
                        geo.lattice,
                        (0..n * n)
                            .map(|idx| {
                                let w = GridNode::new(s as isize, (idx / n) as isize, (idx % n) as isize);
                                match self.value(zn, w, symbol) {
                                    Realized::Scalar(v) => v,
                                    Realized::Vector(v) => v[comp],
                                }
                            })
                            .collect(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            SpaceTimeField::new(geo.t0, geo.dt, slices)
        };
        Ok(match symbol.tag {
            SymbolTag::X | SymbolTag::XNoise => Realization::Vector([build(0)?, build(1)?]),
            _ => Realization::Scalar(build(0)?),
        })
    }

    /// Sup-norm residual of the change-of-base-point identity from w to z.
    ///
    /// Identities involving X hold on the chart where neither x(v) − x(z)
    /// nor x(v) − x(w) wraps; elsewhere the minimal representatives jump by
    /// 2π and the identity is not expected to hold.
    pub fn cbp_residual(&self, z: &ParabolicPoint<T>, w: &ParabolicPoint<T>, symbol: Symbol) -> Result<T> {
        self.check_symbol(symbol)?;
        let zn = self.node_of(z)?;
        let wn = self.node_of(w)?;
        let geo = self.geometry();
        let n = geo.lattice.n() as isize;
        let half = n / 2;
        let (i, j) = (symbol.i, symbol.j);
        let mut worst = T::zero();
        for s in 0..geo.n_slices as isize {
            for a in 0..n {
                for b in 0..n {
                    let v = GridNode::new(s, a, b);
                    let in_chart = |axis: usize| {
                        let (cv, cz, cw) = match axis {
                            0 => (v.i, zn.i, wn.i),
                            _ => (v.j, zn.j, wn.j),
                        };
                        geo.wrap_index(cv - cw).abs() + geo.wrap_index(cz - cw).abs() < half
                    };
                    let r = match symbol.tag {
                        SymbolTag::Noise => self.noise(i, v) - self.noise(i, v),
                        SymbolTag::Lolli => {
                            let lhs = self.lolli(i, v) - self.lolli(i, zn);
                            let rhs = (self.lolli(i, v) - self.lolli(i, wn)) - (self.lolli(i, zn) - self.lolli(i, wn));
                            lhs - rhs
                        }
                        SymbolTag::X | SymbolTag::XNoise => {
                            if !(in_chart(0) && in_chart(1)) {
                                continue;
                            }
                            let xz = self.x_diff(zn, v);
                            let xw = self.x_diff(wn, v);
                            let wz = self.x_diff(wn, zn);
                            let xi = if symbol.tag == SymbolTag::X { T::one() } else { self.noise(i, v) };
                            let r0 = xz[0] * xi - xw[0] * xi + wz[0] * xi;
                            let r1 = xz[1] * xi - xw[1] * xi + wz[1] * xi;
                            r0.abs().max(r1.abs())
                        }
                        SymbolTag::Dumbbell => {
                            let pz = (self.lolli(j, v) - self.lolli(j, zn)) * self.noise(i, v) - self.renorm[i][j];
                            let pw = (self.lolli(j, v) - self.lolli(j, wn)) * self.noise(i, v) - self.renorm[i][j];
                            pz - pw + (self.lolli(j, zn) - self.lolli(j, wn)) * self.noise(i, v)
                        }
                    };
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }

    /// ⟨Π_z τ, φ_z⟩ by the kernel's grid quadrature.
    pub fn pair(&self, z: GridNode, symbol: Symbol, kernel: &DiscreteKernel<T>) -> Result<Realized<T>> {
        self.check_symbol(symbol)?;
        kernel.check_support(&self.noises[0], z)?;
        let comp = |c: usize| {
            kernel.apply(z, |s, a, b| match self.value(z, GridNode::new(s, a, b), symbol) {
                Realized::Scalar(v) => v,
                Realized::Vector(v) => v[c],
            })
        };
        Ok(match symbol.tag {
            SymbolTag::X | SymbolTag::XNoise => Realized::Vector([comp(0), comp(1)]),
            _ => Realized::Scalar(comp(0)),
        })
    }
}
