//! Sampled suprema of pair functionals over space-time regions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::rng::{stream, Purpose};
use crate::scalar::Real;
use crate::torus::{parabolic_distance, GridNode, ParabolicPoint, SpaceTimeSeries, TorusLattice};

/// Uniform space-time grid underlying a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridGeometry<T: Real> {
    pub lattice: TorusLattice,
    pub t0: T,
    pub dt: T,
    pub n_slices: usize,
}

impl<T: Real> GridGeometry<T> {
    pub fn of(series: &SpaceTimeSeries<T>) -> Self {
        Self {
            lattice: series.lattice(),
            t0: series.t0(),
            dt: series.dt(),
            n_slices: series.n_slices(),
        }
    }

    pub fn h(&self) -> T {
        self.lattice.spacing()
    }

    pub fn time(&self, s: isize) -> T {
        self.t0 + self.dt * T::lit(s as f64)
    }

    pub fn point(&self, node: GridNode) -> ParabolicPoint<T> {
        let n = self.lattice.n() as isize;
        self.lattice.point(self.time(node.s), node.i.rem_euclid(n) as usize, node.j.rem_euclid(n) as usize)
    }

    /// Slice index nearest to `t`.
    pub fn slice_of(&self, t: T) -> isize {
        ((t - self.t0) / self.dt).round().to_isize().unwrap_or(isize::MIN)
    }

    /// Torus-minimal signed index difference.
    pub fn wrap_index(&self, d: isize) -> isize {
        let n = self.lattice.n() as isize;
        let r = d.rem_euclid(n);
        if r > n / 2 {
            r - n
        } else {
            r
        }
    }

    /// Parabolic distance between two nodes.
    pub fn distance(&self, z: GridNode, w: GridNode) -> T {
        let h = self.h();
        let di = T::lit(self.wrap_index(w.i - z.i) as f64) * h;
        let dj = T::lit(self.wrap_index(w.j - z.j) as f64) * h;
        let dt = T::lit((w.s - z.s).unsigned_abs() as f64) * self.dt;
        dt.sqrt().max(di.hypot(dj))
    }
}

/// Time window [t_min, t_max], optionally intersected with a ball
/// {d(·, c) < r, t ≤ c.t} looking to the past of its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Region<T: Real> {
    pub t_min: T,
    pub t_max: T,
    pub ball: Option<(ParabolicPoint<T>, T)>,
}

impl<T: Real> Region<T> {
    pub fn window(t_min: T, t_max: T) -> Self {
        Self { t_min, t_max, ball: None }
    }

    pub fn past_ball(center: ParabolicPoint<T>, radius: T) -> Self {
        Self {
            t_min: center.t - radius * radius,
            t_max: center.t,
            ball: Some((center, radius)),
        }
    }

    pub fn contains(&self, geo: &GridGeometry<T>, node: GridNode) -> bool {
        if node.s < 0 || node.s >= geo.n_slices as isize {
            return false;
        }
        let t = geo.time(node.s);
        let tol = geo.dt * T::lit(1e-9);
        if t < self.t_min - tol || t > self.t_max + tol {
            return false;
        }
        match &self.ball {
            None => true,
            Some((c, r)) => t <= c.t + tol && parabolic_distance(c, &geo.point(node)) < *r,
        }
    }

    /// Slice range intersecting the window.
    fn slices(&self, geo: &GridGeometry<T>) -> Option<(isize, isize)> {
        let lo = ((self.t_min - geo.t0) / geo.dt - T::lit(1e-9)).ceil().to_isize()?.max(0);
        let hi = ((self.t_max - geo.t0) / geo.dt + T::lit(1e-9)).floor().to_isize()?.min(geo.n_slices as isize - 1);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Sampling controls. `dense` enumerates every pair in the region and is
/// meant for small oracle grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub basepoints: usize,
    pub pair_cap: Option<usize>,
    pub seed: u64,
    pub dense: bool,
}

impl Default for PlanSpec {
    fn default() -> Self {
        Self {
            basepoints: 64,
            pair_cap: None,
            seed: 0,
            dense: false,
        }
    }
}

impl PlanSpec {
    pub fn dense() -> Self {
        Self {
            dense: true,
            ..Self::default()
        }
    }

    pub fn with_basepoints(mut self, n: usize) -> Self {
        self.basepoints = n;
        self
    }
}

/// One sampled pair with its parabolic distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair<T: Real> {
    pub z: GridNode,
    pub w: GridNode,
    pub d: T,
}

/// Directions per distance bin.
pub const DIRECTIONS: usize = 16;

/// Deterministic set of (z, w) pairs inside a region, grouped by basepoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPlan<T: Real> {
    pub geometry: GridGeometry<T>,
    pub region: Region<T>,
    pub groups: Vec<Vec<SamplePair<T>>>,
    pub n_bins: usize,
}

impl<T: Real> PairPlan<T> {
    pub fn build(geometry: GridGeometry<T>, region: Region<T>, spec: PlanSpec) -> Result<Self> {
        let (s_lo, s_hi) = region
            .slices(&geometry)
            .ok_or_else(|| Error::EmptyRegion("no time slice inside the window".into()))?;
        let n = geometry.lattice.n() as isize;
        let all_nodes = || {
            (s_lo..=s_hi).flat_map(move |s| (0..n).flat_map(move |i| (0..n).map(move |j| GridNode::new(s, i, j))))
        };
        if spec.dense {
            let nodes: Vec<GridNode> = all_nodes().filter(|&z| region.contains(&geometry, z)).collect();
            if nodes.is_empty() {
                return Err(Error::EmptyRegion("no grid node inside the region".into()));
            }
            let groups = nodes
                .iter()
                .map(|&z| {
                    nodes
                        .iter()
                        .filter(|&&w| w != z)
                        .map(|&w| SamplePair {
                            z,
                            w,
                            d: geometry.distance(z, w),
                        })
                        .collect()
                })
                .collect();
            return Ok(Self {
                geometry,
                region,
                groups,
                n_bins: 0,
            });
        }
        let basepoints = Self::basepoints(&geometry, &region, spec, s_lo, s_hi)?;
        let radii = Self::radii(&geometry, &region);
        let offsets = Self::offsets(&geometry, &radii);
        let mut groups: Vec<Vec<SamplePair<T>>> = basepoints
            .iter()
            .map(|&z| {
                let mut g: Vec<SamplePair<T>> = Vec::new();
                for &(ds, di, dj) in &offsets {
                    let w = z.offset(ds, di, dj);
                    if region.contains(&geometry, w) {
                        g.push(SamplePair {
                            z,
                            w,
                            d: geometry.distance(z, w),
                        });
                    }
                }
                g
            })
            .collect();
        if let Some(cap) = spec.pair_cap {
            let per = (cap / groups.len().max(1)).max(1);
            for g in &mut groups {
                g.truncate(per);
            }
        }
        Ok(Self {
            geometry,
            region,
            groups,
            n_bins: radii.len(),
        })
    }

    fn basepoints(geo: &GridGeometry<T>, region: &Region<T>, spec: PlanSpec, s_lo: isize, s_hi: isize) -> Result<Vec<GridNode>> {
        let n = geo.lattice.n() as isize;
        let mut rng = stream(spec.seed, 0, Purpose::Basepoints, 0);
        let mut out = Vec::with_capacity(spec.basepoints);
        if let Some((c, r)) = region.ball {
            // enumerate the ball around its center node
            let cs = geo.slice_of(c.t);
            let ci = geo.lattice.index_of(c.x[0]).unwrap_or(0) as isize;
            let cj = geo.lattice.index_of(c.x[1]).unwrap_or(0) as isize;
            let rs = (r * r / geo.dt).ceil().to_isize().unwrap_or(0) + 1;
            let rx = (r / geo.h()).ceil().to_isize().unwrap_or(0) + 1;
            let mut nodes = Vec::new();
            for s in cs - rs..=cs {
                for i in ci - rx..=ci + rx {
                    for j in cj - rx..=cj + rx {
                        let node = GridNode::new(s, i, j);
                        if region.contains(geo, node) {
                            nodes.push(node);
                        }
                    }
                }
            }
            if nodes.is_empty() {
                return Err(Error::EmptyRegion("no grid node inside the ball".into()));
            }
            if nodes.len() <= spec.basepoints {
                return Ok(nodes);
            }
            for _ in 0..spec.basepoints {
                out.push(nodes[rng.gen_range(0..nodes.len())]);
            }
            return Ok(out);
        }
        let span = (s_hi - s_lo) as f64;
        for k in 0..spec.basepoints {
            let s = if k % 2 == 0 || span < 1.0 {
                rng.gen_range(s_lo..=s_hi)
            } else {
                // geometric toward the start of the window
                let levels = span.max(1.0).log2();
                let u: f64 = rng.gen();
                s_lo + (span * (-u * levels).exp2()).floor() as isize
            };
            out.push(GridNode::new(s, rng.gen_range(0..n), rng.gen_range(0..n)));
        }
        Ok(out)
    }

    /// Dyadic bin radii from the region scale down to one grid cell.
    fn radii(geo: &GridGeometry<T>, region: &Region<T>) -> Vec<T> {
        let h = geo.h();
        let mut top = T::one().min((region.t_max - region.t_min).max(T::zero()).sqrt().max(h));
        if let Some((_, r)) = region.ball {
            top = top.min(r);
        }
        top = top.max(h);
        let mut out = Vec::new();
        let mut r = top * T::lit(0.75);
        while r >= h {
            out.push(r);
            r = r / T::lit(2.0);
        }
        out.push(h);
        out
    }

    fn offsets(geo: &GridGeometry<T>, radii: &[T]) -> Vec<(isize, isize, isize)> {
        let h = geo.h();
        let snap = |v: T| v.round().to_isize().unwrap_or(0);
        let mut out: Vec<(isize, isize, isize)> = Vec::new();
        for &r in radii {
            let c = r / h;
            let diag = c * T::lit(std::f64::consts::FRAC_1_SQRT_2);
            let ds = snap(r * r / geo.dt);
            // eight spatial directions
            let spatial = [
                (c, T::zero()),
                (-c, T::zero()),
                (T::zero(), c),
                (T::zero(), -c),
                (diag, diag),
                (-diag, -diag),
                (diag, -diag),
                (-diag, diag),
            ];
            for (a, b) in spatial {
                out.push((0, snap(a), snap(b)));
            }
            // eight past/future directions
            for sign in [-1isize, 1] {
                for (a, b) in [(T::zero(), T::zero()), (c, T::zero()), (T::zero(), c), (diag, diag)] {
                    out.push((sign * ds, snap(a), snap(b)));
                }
            }
        }
        out.retain(|&o| o != (0, 0, 0));
        let mut seen = std::collections::HashSet::new();
        out.retain(|o| seen.insert(*o));
        out
    }

    /// Basepoints alone, drawn as in [`PairPlan::build`].
    pub fn sample_basepoints(geometry: &GridGeometry<T>, region: &Region<T>, spec: PlanSpec) -> Result<Vec<GridNode>> {
        let (s_lo, s_hi) = region
            .slices(geometry)
            .ok_or_else(|| Error::EmptyRegion("no time slice inside the window".into()))?;
        Self::basepoints(geometry, region, spec, s_lo, s_hi)
    }

    pub fn n_basepoints(&self) -> usize {
        self.groups.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// sup over pairs passing `keep` of |f(z, w)|/d^exponent, with an
    /// ordered max-reduction so ties resolve to the earliest pair.
    pub fn sup<F, K>(&self, exponent: T, f: F, keep: K) -> SemiNormReport<T>
    where
        F: Fn(GridNode, GridNode) -> T + Sync,
        K: Fn(&SamplePair<T>) -> bool + Sync,
    {
        let per: Vec<(T, Option<SamplePair<T>>, usize)> = self
            .groups
            .par_iter()
            .map(|g| {
                let mut best = T::zero();
                let mut arg = None;
                let mut count = 0;
                for p in g.iter().filter(|p| keep(p)) {
                    count += 1;
                    let v = f(p.z, p.w).abs() / p.d.powf(exponent);
                    if arg.is_none() || v > best {
                        best = v;
                        arg = Some(*p);
                    }
                }
                (best, arg, count)
            })
            .collect();
        let mut report = SemiNormReport::empty(self.n_basepoints(), self.n_bins);
        for (v, arg, count) in per {
            report.n_samples += count;
            if let Some(p) = arg {
                if report.witness_z.is_none() || v > report.value {
                    report.value = v;
                    report.witness_z = Some(self.geometry.point(p.z));
                    report.witness_w = Some(self.geometry.point(p.w));
                    report.witness_nodes = Some((p.z, p.w));
                }
            }
        }
        report
    }
}

/// Value of a sampled supremum with the pair or scale that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SemiNormReport<T: Real> {
    pub value: T,
    pub n_basepoints: usize,
    pub n_scales: usize,
    pub n_kernels: usize,
    pub n_samples: usize,
    pub witness_z: Option<ParabolicPoint<T>>,
    pub witness_w: Option<ParabolicPoint<T>>,
    #[serde(skip)]
    pub witness_nodes: Option<(GridNode, GridNode)>,
    pub witness_l: Option<T>,
    pub witness_kernel: Option<usize>,
}

impl<T: Real> SemiNormReport<T> {
    pub fn empty(n_basepoints: usize, n_scales: usize) -> Self {
        Self {
            value: T::zero(),
            n_basepoints,
            n_scales,
            n_kernels: 0,
            n_samples: 0,
            witness_z: None,
            witness_w: None,
            witness_nodes: None,
            witness_l: None,
            witness_kernel: None,
        }
    }
}

/// [u]_α on a region: sup |u(w) − u(z)|/d(z, w)^α over the plan.
pub fn holder_seminorm<T: Real>(u: &SpaceTimeSeries<T>, alpha: T, region: Region<T>, spec: PlanSpec) -> Result<SemiNormReport<T>> {
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(Error::OutOfRange(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    let plan = PairPlan::build(GridGeometry::of(u), region, spec)?;
    Ok(holder_on_plan(u, alpha, &plan))
}

/// [u]_α over a prebuilt plan.
pub fn holder_on_plan<T: Real>(u: &SpaceTimeSeries<T>, alpha: T, plan: &PairPlan<T>) -> SemiNormReport<T> {
    plan.sup(
        alpha,
        |z, w| u.value(w.s as usize, w.i, w.j) - u.value(z.s as usize, z.i, z.j),
        |_| true,
    )
}
