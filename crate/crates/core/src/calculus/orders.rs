//! Order-bound estimators [Π;τ] over a time window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discrete::DiscreteKernel;
use super::kernel::MollifierKernel;
use super::seminorm::{PairPlan, PlanSpec, Region, SemiNormReport};
use crate::error::{Error, Result};
use crate::model::{Model, Symbol, SymbolTag};
use crate::scalar::Real;

/// Scales, kernels and sampling plan of an order-bound estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrderBoundSpec<T: Real> {
    pub t_min: T,
    pub t_max: T,
    pub scales: Vec<T>,
    pub kernels: Vec<MollifierKernel>,
    pub plan: PlanSpec,
}

/// [Π;τ] on the window. Negative homogeneities use sup |⟨Π_zτ, φ_z^L⟩|·L^{−|τ|};
/// LOLLI and X use sup |(Π_zτ)(w)|/d(z, w)^{|τ|}.
pub fn order_bound<T: Real>(model: &Model<T>, symbol: Symbol, spec: &OrderBoundSpec<T>) -> Result<SemiNormReport<T>> {
    let geo = model.geometry();
    let region = Region::window(spec.t_min, spec.t_max);
    let hom = symbol.homogeneity(model.kappa);
    match symbol.tag {
        SymbolTag::Lolli | SymbolTag::X => {
            let plan = PairPlan::build(geo, region, spec.plan)?;
            Ok(plan.sup(hom, |z, w| model.value(z, w, symbol).magnitude(), |_| true))
        }
        SymbolTag::Noise | SymbolTag::XNoise | SymbolTag::Dumbbell => {
            let h = geo.h();
            if spec.scales.iter().any(|&l| !(l > h && l < T::one())) {
                return Err(Error::OutOfRange("scales must lie in (grid spacing, 1)".into()));
            }
            if spec.kernels.is_empty() {
                return Err(Error::OutOfRange("need at least one kernel".into()));
            }
            let bases = PairPlan::sample_basepoints(&geo, &region, spec.plan)?;
            let tab: Vec<(T, usize, DiscreteKernel<T>)> = spec
                .scales
                .iter()
                .flat_map(|&l| {
                    spec.kernels
                        .iter()
                        .map(move |k| (l, k.id, DiscreteKernel::from_mollifier(k, l.as_f64(), geo.dt, h)))
                })
                .collect();
            let per: Vec<Vec<(T, usize)>> = bases
                .par_iter()
                .map(|&z| {
                    tab.iter()
                        .enumerate()
                        .filter_map(|(idx, (l, _, k))| {
                            let v = model.pair(z, symbol, k).ok()?;
                            Some((v.magnitude() * l.powf(-hom), idx))
                        })
                        .collect()
                })
                .collect();
            let mut report = SemiNormReport::empty(bases.len(), spec.scales.len());
            report.n_kernels = spec.kernels.len();
            for (z, vals) in bases.iter().zip(per) {
                for (v, idx) in vals {
                    report.n_samples += 1;
                    if report.witness_z.is_none() || v > report.value {
                        report.value = v;
                        report.witness_z = Some(geo.point(*z));
                        report.witness_l = Some(tab[idx].0);
                        report.witness_kernel = Some(tab[idx].1);
                    }
                }
            }
            if report.n_samples == 0 {
                return Err(Error::EmptyRegion("no kernel fits inside the window at any basepoint".into()));
            }
            Ok(report)
        }
    }
}

/// C₁ = max over NOISE, LOLLI, XNOISE and C₂ = DUMBBELL on one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrderBoundReport<T: Real> {
    pub noise: SemiNormReport<T>,
    pub lolli: SemiNormReport<T>,
    pub xnoise: SemiNormReport<T>,
    pub dumbbell: SemiNormReport<T>,
    pub c1: T,
    pub c2: T,
}

pub fn interval_order_bounds<T: Real>(model: &Model<T>, spec: &OrderBoundSpec<T>) -> Result<OrderBoundReport<T>> {
    let noise = order_bound(model, Symbol::NOISE, spec)?;
    let lolli = order_bound(model, Symbol::LOLLI, spec)?;
    let xnoise = order_bound(model, Symbol::XNOISE, spec)?;
    let dumbbell = order_bound(model, Symbol::DUMBBELL, spec)?;
    let c1 = noise.value.max(lolli.value).max(xnoise.value);
    let c2 = dumbbell.value;
    Ok(OrderBoundReport {
        noise,
        lolli,
        xnoise,
        dumbbell,
        c1,
        c2,
    })
}
