//! Test functions, semigroup kernels, regularization, parabolic Hölder
//! semi-norms, order bounds and the U-expansion.

mod boxes;
mod discrete;
mod kernel;
mod orders;
mod seminorm;
mod ufield;

pub use boxes::Box3;
pub use discrete::{semigroup_kernel, DiscreteKernel, SemigroupKernel, SemigroupLadder, DEPTH_CAP};
pub use kernel::{bump, bump_derivative, bump_mass, ibp_identity, kernel_set, scale_kernel, trapezoid, IbpIdentity, MollifierKernel, ScaledKernel};
pub use orders::{interval_order_bounds, order_bound, OrderBoundReport, OrderBoundSpec};
pub use seminorm::{holder_on_plan, holder_seminorm, GridGeometry, PairPlan, PlanSpec, Region, SamplePair, SemiNormReport, DIRECTIONS};
pub use ufield::{
    build_ufield, build_ufield_with_lolli, gamma_on_plan, gamma_seminorm_u, gradient_bounds_check, gradient_relation_check, regularize,
    weighted_seminorm_u, GradientBoundsReport, GradientRelationReport, UField, WeightedReport,
};
