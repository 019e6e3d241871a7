//! Time integration of the renormalized equations, the linear heat solve and
//! the transport / Feynman–Kac pair.

mod heat;
mod integrator;
mod phi;
mod problem;
mod sigma;
mod transport;

pub use heat::{heat_residual, solve_linear_heat, HeatStepper};
pub use integrator::{Integrator, Scheme};
pub use phi::{etdrk4_weights, phi1, phi2, phi3};
pub use problem::{solve_renormalized, NoiseSource, PdeProblem, SigmaBoundReport, SolverConfig, Trajectory};
pub use sigma::Sigma;
pub use transport::{bilinear, flow_composition_check, max_principle_check, solve_transport_grid, solve_transport_mc, FlowCompositionReport, MaxPrincipleReport, McConfig, McEstimate};
