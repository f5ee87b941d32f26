//! MUSCL finite-volume schemes with slope limiters adapted to non-uniform grids.
//!
//! Everything numerical is generic over the scalar type ([`real::Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`.

pub mod advection;
pub mod analysis;
pub mod euler;
pub mod limiters;
pub mod mesh;
pub mod problems;
pub mod real;
pub mod solver;

pub use limiters::{Flavor, LimiterFamily, LimiterKind};
pub use real::Real;

pub type Grid1D = mesh::Grid1D<f64>;
pub type Grid2D = mesh::Grid2D<f64>;
pub type LimiterParams = limiters::LimiterParams<f64>;
pub type GasModel = euler::GasModel<f64>;
pub type ConsState<const D: usize> = euler::ConsState<f64, D>;
pub type PrimState<const D: usize> = euler::PrimState<f64, D>;
pub type RepState = advection::RepState<f64>;
pub type Mesh<const D: usize> = solver::Mesh<f64, D>;
pub type Field<const D: usize> = solver::Field<f64, D>;
pub type Solver<const D: usize> = solver::Solver<f64, D>;
pub type Problem<const D: usize> = problems::Problem<f64, D>;
