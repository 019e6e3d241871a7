//! The local expansion U_z(w) = u(w) − u(z) − σ(u(z))(Π_z\<1>)(w), the
//! generalized gradient u_X and the norms built on them.

use serde::{Deserialize, Serialize};

use super::discrete::DiscreteKernel;
use super::kernel::{ibp_identity, IbpIdentity, MollifierKernel};
use super::seminorm::{GridGeometry, PairPlan, PlanSpec, Region, SemiNormReport};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;
use crate::solver::Sigma;
use crate::torus::{Fft2, GridField, GridNode, SpaceTimeField, SpaceTimeSeries};

/// u together with σ(u), σ′(u), σ′σ(u), spectral gradients and u_X.
#[derive(Debug, Clone)]
pub struct UField<T: Real> {
    pub u: SpaceTimeSeries<T>,
    pub lolli: SpaceTimeSeries<T>,
    pub sigma: Sigma<T>,
    pub sigma_u: SpaceTimeField<T>,
    pub sigma_d1: SpaceTimeField<T>,
    pub sigma_d1_sigma: SpaceTimeField<T>,
    pub grad_u: [SpaceTimeField<T>; 2],
    pub grad_lolli: [SpaceTimeField<T>; 2],
    pub u_x: [SpaceTimeField<T>; 2],
}

fn gradients<T: Real>(fft: &Fft2<T>, series: &SpaceTimeSeries<T>) -> Result<[SpaceTimeField<T>; 2]> {
    let mut gx = Vec::with_capacity(series.n_slices());
    let mut gy = Vec::with_capacity(series.n_slices());
    for s in 0..series.n_slices() {
        let [a, b] = fft.gradient(&series.slice(s))?;
        gx.push(a);
        gy.push(b);
    }
    Ok([
        SpaceTimeField::new(series.t0(), series.dt(), gx)?,
        SpaceTimeField::new(series.t0(), series.dt(), gy)?,
    ])
}

/// Builds U from u and the first lollipop of `model`, which must share the
/// time grid of `u`.
pub fn build_ufield<T: Real>(u: SpaceTimeSeries<T>, model: &Model<T>, sigma: Sigma<T>) -> Result<UField<T>> {
    build_ufield_with_lolli(u, model.lollis[0].clone(), sigma)
}

pub fn build_ufield_with_lolli<T: Real>(u: SpaceTimeSeries<T>, lolli: SpaceTimeSeries<T>, sigma: Sigma<T>) -> Result<UField<T>> {
    let (gu, gl) = (GridGeometry::of(&u), GridGeometry::of(&lolli));
    if gu.lattice != gl.lattice {
        return Err(Error::LatticeMismatch {
            expected: gu.lattice.n(),
            found: gl.lattice.n(),
        });
    }
    if gu.n_slices != gl.n_slices || (gu.t0 - gl.t0).abs() > gu.dt * T::lit(1e-9) || (gu.dt - gl.dt).abs() > gu.dt * T::lit(1e-9) {
        return Err(Error::TimeRange("u and the lollipop must share one time grid".into()));
    }
    let fft = Fft2::new(gu.lattice);
    let field = u.to_field();
    let sigma_u = field.map(|v| sigma.value(v));
    let sigma_d1 = field.map(|v| sigma.d1(v));
    let sigma_d1_sigma = field.map(|v| sigma.d1_times_value(v));
    let grad_u = gradients(&fft, &u)?;
    let grad_lolli = gradients(&fft, &lolli)?;
    let u_x = [0, 1].map(|a| {
        let slices = (0..field.len())
            .map(|s| {
                let gl = grad_lolli[a].slice(s);
                let su = sigma_u.slice(s);
                grad_u[a].slice(s).zip_map(&gl.zip_map(su, |g, v| g * v), |g, p| g - p)
            })
            .collect();
        SpaceTimeField::new(field.t0(), field.dt(), slices).expect("non-empty")
    });
    Ok(UField {
        u,
        lolli,
        sigma,
        sigma_u,
        sigma_d1,
        sigma_d1_sigma,
        grad_u,
        grad_lolli,
        u_x,
    })
}

impl<T: Real> UField<T> {
    pub fn geometry(&self) -> GridGeometry<T> {
        GridGeometry::of(&self.u)
    }

    #[inline]
    pub fn u_at(&self, z: GridNode) -> T {
        self.u.value(z.s as usize, z.i, z.j)
    }

    #[inline]
    fn lolli_at(&self, z: GridNode) -> T {
        self.lolli.value(z.s as usize, z.i, z.j)
    }

    #[inline]
    fn field_at(f: &SpaceTimeField<T>, z: GridNode) -> T {
        f.slice(z.s as usize).get_wrapped(z.i, z.j)
    }

    pub fn sigma_at(&self, z: GridNode) -> T {
        Self::field_at(&self.sigma_u, z)
    }

    pub fn sigma_d1_at(&self, z: GridNode) -> T {
        Self::field_at(&self.sigma_d1, z)
    }

    pub fn sigma_d1_sigma_at(&self, z: GridNode) -> T {
        Self::field_at(&self.sigma_d1_sigma, z)
    }

    /// U_z(w).
    #[inline]
    pub fn expansion(&self, z: GridNode, w: GridNode) -> T {
        self.u_at(w) - self.u_at(z) - self.sigma_at(z) * (self.lolli_at(w) - self.lolli_at(z))
    }

    /// u_X(z) = ∇u(z) − σ(u(z))∇\<1b>(z).
    pub fn generalized_gradient(&self, z: GridNode) -> [T; 2] {
        [Self::field_at(&self.u_x[0], z), Self::field_at(&self.u_x[1], z)]
    }

    /// Centered differences of w ↦ U_z(w) at w = z.
    pub fn finite_difference_gradient(&self, z: GridNode) -> [T; 2] {
        let h = self.geometry().h();
        let two_h = h + h;
        [
            (self.expansion(z, z.offset(0, 1, 0)) - self.expansion(z, z.offset(0, -1, 0))) / two_h,
            (self.expansion(z, z.offset(0, 0, 1)) - self.expansion(z, z.offset(0, 0, -1))) / two_h,
        ]
    }

    /// U_z(w) − u_X(z)·(Π_zX)(w).
    #[inline]
    pub fn remainder(&self, z: GridNode, w: GridNode) -> T {
        let geo = self.geometry();
        let h = geo.h();
        let ux = self.generalized_gradient(z);
        let dx = T::lit(geo.wrap_index(w.i - z.i) as f64) * h;
        let dy = T::lit(geo.wrap_index(w.j - z.j) as f64) * h;
        self.expansion(z, w) - ux[0] * dx - ux[1] * dy
    }
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if !(gamma > T::one() && gamma < T::lit(2.0)) {
        return Err(Error::OutOfRange(format!("gamma must lie in (1, 2), got {gamma}")));
    }
    Ok(())
}

/// [U]_γ on a region with u_X as the minimizing vector field.
pub fn gamma_seminorm_u<T: Real>(uf: &UField<T>, gamma: T, region: Region<T>, spec: PlanSpec) -> Result<SemiNormReport<T>> {
    check_gamma(gamma)?;
    let plan = PairPlan::build(uf.geometry(), region, spec)?;
    Ok(gamma_on_plan(uf, gamma, &plan))
}

pub fn gamma_on_plan<T: Real>(uf: &UField<T>, gamma: T, plan: &PairPlan<T>) -> SemiNormReport<T> {
    plan.sup(gamma, |z, w| uf.remainder(z, w), |_| true)
}

/// Weighted norm with its per-level table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WeightedReport<T: Real> {
    pub value: T,
    /// [U]_γ over the whole window [a, b] on the same plan.
    pub unweighted: T,
    /// (τ, d_τ^γ·[U]_{γ,D_τ^b,d_τ}, [U]_{γ,D_τ^b,d_τ}).
    pub levels: Vec<(T, T, T)>,
}

/// sup over dyadic τ ∈ (a, b] of d_τ^γ·[U]_{γ, D_τ^b, d_τ}, d_τ = √(τ − a).
pub fn weighted_seminorm_u<T: Real>(uf: &UField<T>, gamma: T, a: T, b: T, spec: PlanSpec) -> Result<WeightedReport<T>> {
    check_gamma(gamma)?;
    if !(a >= T::zero() && a < b) {
        return Err(Error::OutOfRange("need 0 <= a < b".into()));
    }
    let geo = uf.geometry();
    let plan = PairPlan::build(geo, Region::window(a, b), spec)?;
    let unweighted = gamma_on_plan(uf, gamma, &plan).value;
    let mut levels = Vec::new();
    let mut value = T::zero();
    let mut width = b - a;
    while width >= geo.dt {
        let tau = a + width;
        let d_tau = width.sqrt();
        let tol = geo.dt * T::lit(1e-9);
        let local = plan
            .sup(
                gamma,
                |z, w| uf.remainder(z, w),
                |p| geo.time(p.z.s) >= tau - tol && geo.time(p.w.s) >= tau - tol && p.d <= d_tau,
            )
            .value;
        let weighted = d_tau.powf(gamma) * local;
        value = value.max(weighted);
        levels.push((tau, weighted, local));
        width = width / T::lit(2.0);
    }
    Ok(WeightedReport { value, unweighted, levels })
}

/// u_L(z) = ⟨u, φ^L_z⟩ at every slice with t ≥ 4L² that the kernel fits in.
pub fn regularize<T: Real>(u: &SpaceTimeSeries<T>, scale: T, psi: &MollifierKernel) -> Result<SpaceTimeField<T>> {
    let geo = GridGeometry::of(u);
    let kernel = DiscreteKernel::from_mollifier(psi, scale.as_f64(), geo.dt, geo.h());
    let t_min = T::lit(4.0) * scale * scale;
    let first_t = ((t_min - geo.t0) / geo.dt - T::lit(1e-9)).ceil().to_isize().unwrap_or(0).max(0);
    let first = first_t.max(kernel.time_len() as isize - 1);
    if first >= geo.n_slices as isize {
        return Err(Error::TimeRange(format!(
            "no slice with t >= 4L^2 = {t_min} inside [{}, {}]",
            geo.t0,
            u.t_end()
        )));
    }
    let n = geo.lattice.n();
    let slices = (first..geo.n_slices as isize)
        .map(|s| {
            let vals = (0..n * n)
                .map(|idx| kernel.apply(GridNode::new(s, (idx / n) as isize, (idx % n) as isize), |a, b, c| u.value(a as usize, b, c)))
                .collect();
            GridField::from_values(geo.lattice, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(geo.time(first), geo.dt, slices)
}

/// Pieces of the gradient relation at one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GradientRelationReport<T: Real> {
    /// max component of |E_z^L|.
    pub residual: T,
    /// [U]_{γ,B(z,L)}·L^{γ−1}.
    pub bound: T,
    pub seminorm: T,
    pub ibp: IbpIdentity,
}

/// E_z^L = ∇u_L(z) − u_X(z) − σ(u(z))⟨∇\<1b>, φ^L_z⟩ against its bound.
pub fn gradient_relation_check<T: Real>(
    uf: &UField<T>,
    z: GridNode,
    scale: T,
    gamma: T,
    psi: &MollifierKernel,
    spec: PlanSpec,
) -> Result<GradientRelationReport<T>> {
    check_gamma(gamma)?;
    let geo = uf.geometry();
    if geo.time(z.s) < T::lit(4.0) * scale * scale {
        return Err(Error::TimeRange(format!("base point time {} below 4L^2", geo.time(z.s))));
    }
    let kernel = DiscreteKernel::from_mollifier(psi, scale.as_f64(), geo.dt, geo.h());
    kernel.check_support(&uf.u, z)?;
    let sig = uf.sigma_at(z);
    let ux = uf.generalized_gradient(z);
    let mut residual = T::zero();
    for a in 0..2 {
        let gu = &uf.grad_u[a];
        let gl = &uf.grad_lolli[a];
        let grad_ul = kernel.apply(z, |s, i, j| gu.slice(s as usize).get_wrapped(i, j));
        let lolli_term = kernel.apply(z, |s, i, j| gl.slice(s as usize).get_wrapped(i, j));
        residual = residual.max((grad_ul - ux[a] - sig * lolli_term).abs());
    }
    let center = geo.point(z);
    let semi = gamma_seminorm_u(uf, gamma, Region::past_ball(center, scale), spec)?.value;
    Ok(GradientRelationReport {
        residual,
        bound: semi * scale.powf(gamma - T::one()),
        seminorm: semi,
        ibp: ibp_identity(psi, scale.as_f64()),
    })
}

/// Outcome of the gradient bounds on a set of base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GradientBoundsReport<T: Real> {
    /// max ‖u_X‖ over the base points (max component).
    pub gradient: T,
    /// (r, bound r^{γ−1}[U]_γ + r^{−1}‖U‖_r, margin bound − gradient).
    pub per_radius: Vec<(T, T, T)>,
    pub worst_margin: T,
    /// [U]_γ and ‖U‖ over all sampled radii.
    pub seminorm: T,
    pub sup: T,
    /// 2[U]^{1/γ}‖U‖^{1−1/γ} and the bound at the grid radius nearest r*.
    pub interpolation: T,
    pub bound_at_r_star: T,
    pub r_star: T,
}

/// ‖u_X‖ ≤ r^{γ−1}[U]_γ + r^{−1}‖U‖_{·,r} over axis-aligned pairs at
/// r = m·h, m ∈ `cells`, around base points drawn from `region`.
pub fn gradient_bounds_check<T: Real>(uf: &UField<T>, region: Region<T>, cells: &[usize], gamma: T, spec: PlanSpec) -> Result<GradientBoundsReport<T>> {
    check_gamma(gamma)?;
    if cells.is_empty() || cells.contains(&0) {
        return Err(Error::OutOfRange("need positive radii in grid cells".into()));
    }
    let geo = uf.geometry();
    let plan = PairPlan::build(geo, region, spec)?;
    let bases: Vec<GridNode> = plan.groups.iter().filter_map(|g| g.first().map(|p| p.z)).collect();
    if bases.is_empty() {
        return Err(Error::EmptyRegion("no base point with a partner".into()));
    }
    let h = geo.h();
    let mut gradient = T::zero();
    for &z in &bases {
        let g = uf.generalized_gradient(z);
        gradient = gradient.max(g[0].abs()).max(g[1].abs());
    }
    let axis_pairs = |m: isize| {
        let mut semi = T::zero();
        let mut sup = T::zero();
        for &z in &bases {
            for (di, dj) in [(m, 0), (-m, 0), (0, m), (0, -m)] {
                let w = z.offset(0, di, dj);
                let r = T::lit(m as f64) * h;
                semi = semi.max(uf.remainder(z, w).abs() / r.powf(gamma));
                sup = sup.max(uf.expansion(z, w).abs());
            }
        }
        (semi, sup)
    };
    let table: Vec<(T, T, T)> = cells.iter().map(|&m| {
        let (s, u) = axis_pairs(m as isize);
        (T::from_usize_lossy(m) * h, s, u)
    }).collect();
    let semi = table.iter().fold(T::zero(), |a, t| a.max(t.1));
    let sup = table.iter().fold(T::zero(), |a, t| a.max(t.2));
    let mut per_radius = Vec::new();
    let mut worst = T::infinity();
    for &(r, _, _) in &table {
        // norms accumulated over every radius up to r
        let s = table.iter().fold(T::zero(), |a, t| a.max(t.1));
        let u = table.iter().filter(|t| t.0 <= r).fold(T::zero(), |a, t| a.max(t.2));
        let bound = r.powf(gamma - T::one()) * s + u / r;
        worst = worst.min(bound - gradient);
        per_radius.push((r, bound, bound - gradient));
    }
    let interpolation = T::lit(2.0) * semi.powf(T::one() / gamma) * sup.powf(T::one() - T::one() / gamma);
    let r_star = if semi > T::zero() { (sup / semi).powf(T::one() / gamma) } else { T::infinity() };
    let bound_at_r_star = if semi > T::zero() && sup > T::zero() {
        r_star.powf(gamma - T::one()) * semi + sup / r_star
    } else {
        T::zero()
    };
    Ok(GradientBoundsReport {
        gradient,
        per_radius,
        worst_margin: worst,
        seminorm: semi,
        sup,
        interpolation,
        bound_at_r_star,
        r_star,
    })
}
