//! The benchmark problems: domains, initial data, boundary conditions and end times.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::euler::{GasModel, PrimState};
use crate::mesh::{axis_grids, PerturbationParams};
use crate::real::Real;
use crate::solver::{Boundaries, BoundaryCondition, Mesh, SolverError};

/// End time used for convergence studies of the smooth 1D problem (before any shock forms).
pub const SMOOTH1D_CONVERGENCE_T: f64 = 0.2;
/// End time of the long-run stability check of the smooth 1D problem.
pub const SMOOTH1D_LONG_T: f64 = 6.0;
/// Vortex strength.
pub const VORTEX_EPSILON: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem `{0}` (expected one of smooth1d|vortex2d|sod|double_shock|blast|step|dmr)")]
    UnknownName(String),
    #[error("problem `{name}` is {expected}D, got {found} cell counts")]
    Dimension { name: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// How errors against an exact answer are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// The solution after one period equals the initial data.
    AnalyticPeriod,
    /// A much finer computation on a uniform mesh.
    FineGrid,
    None,
}

pub type InitialCondition<T, const D: usize> = Arc<dyn Fn(&[T; D]) -> PrimState<T, D> + Send + Sync>;
/// Returns `true` for cells that take part in the computation.
pub type ActivePredicate<T, const D: usize> = Arc<dyn Fn(&[T; D]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Problem<T, const D: usize> {
    pub name: &'static str,
    pub domain: [(T, T); D],
    /// Default mesh size.
    pub default_cells: [usize; D],
    pub ic: InitialCondition<T, D>,
    pub boundaries: Boundaries<T, D>,
    pub gas: GasModel<T>,
    pub t_end: T,
    pub active: Option<ActivePredicate<T, D>>,
    pub reference: Reference,
}

impl<T: Real, const D: usize> fmt::Debug for Problem<T, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("default_cells", &self.default_cells)
            .field("boundaries", &self.boundaries)
            .field("t_end", &self.t_end)
            .field("masked", &self.active.is_some())
            .field("reference", &self.reference)
            .finish()
    }
}

impl<T: Real, const D: usize> Problem<T, D> {
    /// Tensor-product mesh, perturbed axis by axis from one seed.
    pub fn mesh(&self, cells: [usize; D], perturbation: Option<PerturbationParams>) -> Result<Mesh<T, D>, SolverError> {
        let grids = axis_grids(&self.domain, &cells, perturbation)?;
        let axes: [_; D] = grids.try_into().expect("one grid per axis");
        Ok(Mesh::new(axes))
    }

    /// Active-cell mask evaluated at cell centers, if the problem has a geometry.
    pub fn mask(&self, mesh: &Mesh<T, D>) -> Option<Vec<bool>> {
        self.active.as_ref().map(|f| (0..mesh.len()).map(|c| f(&mesh.center(c))).collect())
    }

    pub fn with_t_end(mut self, t_end: T) -> Self {
        self.t_end = t_end;
        self
    }
}

fn air<T: Real>() -> GasModel<T> {
    GasModel::air()
}

fn prim1<T: Real>(rho: f64, u: f64, p: f64) -> PrimState<T, 1> {
    PrimState::new(T::lit(rho), [T::lit(u)], T::lit(p))
}

fn prim2<T: Real>(rho: f64, u: f64, v: f64, p: f64) -> PrimState<T, 2> {
    PrimState::new(T::lit(rho), [T::lit(u), T::lit(v)], T::lit(p))
}

fn both<T: Real, const D: usize>(bc: BoundaryCondition<T, D>) -> [BoundaryCondition<T, D>; 2] {
    [bc.clone(), bc]
}

/// `rho = 1 + s`, `u = 2 + s`, `p = 1 + s` with `s = sin(pi x) / 2`, periodic on `[-1, 1]`.
pub fn smooth_euler_1d<T: Real>() -> Problem<T, 1> {
    Problem {
        name: "smooth1d",
        domain: [(-T::one(), T::one())],
        default_cells: [100],
        ic: Arc::new(|x: &[T; 1]| {
            let s = T::half() * (T::PI() * x[0]).sin();
            PrimState::new(T::one() + s, [T::two() + s], T::one() + s)
        }),
        boundaries: [both(BoundaryCondition::Periodic)],
        gas: air(),
        t_end: T::lit(SMOOTH1D_CONVERGENCE_T),
        active: None,
        reference: Reference::FineGrid,
    }
}

/// Vortex state at `(x, y)` relative to its center.
pub fn vortex_state<T: Real>(x: T, y: T, epsilon: T, gas: &GasModel<T>) -> PrimState<T, 2> {
    let g = gas.gamma();
    let pi = T::PI();
    let r2 = x * x + y * y;
    let swirl = epsilon / (T::two() * pi) * (T::half() * (T::one() - r2)).exp();
    let temp = T::one() - (g - T::one()) * epsilon * epsilon / (T::lit(8.0) * g * pi * pi) * (T::one() - r2).exp();
    let rho = temp.powf((g - T::one()).recip());
    PrimState::new(rho, [T::one() - swirl * y, T::one() + swirl * x], rho.powf(g))
}

/// Exact vortex solution at time `t`: the initial vortex carried along `(1, 1)` on the periodic box.
pub fn vortex_exact<T: Real>(p: &[T; 2], t: T, gas: &GasModel<T>) -> PrimState<T, 2> {
    let (lo, width) = (T::lit(-5.0), T::lit(10.0));
    let wrap = |z: T| {
        let s = (z - t - lo) % width;
        (if s < T::zero() { s + width } else { s }) + lo
    };
    vortex_state(wrap(p[0]), wrap(p[1]), T::lit(VORTEX_EPSILON), gas)
}

pub fn isentropic_vortex_2d<T: Real>() -> Problem<T, 2> {
    let gas = air();
    Problem {
        name: "vortex2d",
        domain: [(T::lit(-5.0), T::lit(5.0)); 2],
        default_cells: [160, 160],
        ic: Arc::new(move |p: &[T; 2]| vortex_state(p[0], p[1], T::lit(VORTEX_EPSILON), &gas)),
        boundaries: [both(BoundaryCondition::Periodic), both(BoundaryCondition::Periodic)],
        gas,
        t_end: T::lit(10.0),
        active: None,
        reference: Reference::AnalyticPeriod,
    }
}

fn riemann_1d<T: Real>(
    name: &'static str,
    half_width: f64,
    left: PrimState<T, 1>,
    right: PrimState<T, 1>,
    cells: usize,
) -> Problem<T, 1> {
    Problem {
        name,
        domain: [(T::lit(-half_width), T::lit(half_width))],
        default_cells: [cells],
        ic: Arc::new(move |x: &[T; 1]| if x[0] < T::zero() { left } else { right }),
        boundaries: [both(BoundaryCondition::NeumannOutflow)],
        gas: air(),
        t_end: T::lit(0.8),
        active: None,
        reference: Reference::None,
    }
}

pub fn sod_shock_tube<T: Real>() -> Problem<T, 1> {
    riemann_1d("sod", 2.0, prim1(1.0, 0.0, 1.0), prim1(0.125, 0.0, 0.1), 200)
}

pub fn double_shock<T: Real>() -> Problem<T, 1> {
    riemann_1d("double_shock", 3.0, prim1(1.0, 3.0, 1.0), prim1(2.0, 1.0, 1.0), 150)
}

pub fn blast_wave<T: Real>() -> Problem<T, 1> {
    Problem {
        name: "blast",
        domain: [(T::zero(), T::one())],
        default_cells: [200],
        ic: Arc::new(|x: &[T; 1]| {
            let p = if x[0] < T::lit(0.1) {
                1000.0
            } else if x[0] < T::lit(0.9) {
                0.01
            } else {
                100.0
            };
            prim1(1.0, 0.0, p)
        }),
        boundaries: [both(BoundaryCondition::ReflectiveWall)],
        gas: air(),
        t_end: T::lit(0.038),
        active: None,
        reference: Reference::None,
    }
}

pub fn step_inflow<T: Real>() -> PrimState<T, 2> {
    prim2(1.4, 3.0, 0.0, 1.0)
}

/// Mach 3 tunnel on `[0,3]x[0,1]` with a step of height 0.2 starting at `x = 0.6`.
pub fn wind_tunnel_step<T: Real>() -> Problem<T, 2> {
    let inflow = step_inflow();
    Problem {
        name: "step",
        domain: [(T::zero(), T::lit(3.0)), (T::zero(), T::one())],
        default_cells: [150, 50],
        ic: Arc::new(move |_: &[T; 2]| inflow),
        boundaries: [
            [BoundaryCondition::SupersonicInflow(inflow), BoundaryCondition::NeumannOutflow],
            both(BoundaryCondition::ReflectiveWall),
        ],
        gas: air(),
        t_end: T::lit(4.0),
        active: Some(Arc::new(|p: &[T; 2]| !(p[0] > T::lit(0.6) && p[1] < T::lit(0.2)))),
        reference: Reference::None,
    }
}

pub fn dmr_post_shock<T: Real>() -> PrimState<T, 2> {
    let a = std::f64::consts::FRAC_PI_6;
    prim2(8.0, 8.25 * a.cos(), -8.25 * a.sin(), 116.5)
}

pub fn dmr_pre_shock<T: Real>() -> PrimState<T, 2> {
    prim2(1.4, 0.0, 0.0, 1.0)
}

/// Where the exact shock meets the top boundary `y = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DmrFront {
    /// `1/6 + (1 + 20 t)/sqrt(3)`: the initial shock line `x = 1/6 + y/sqrt(3)` moving at speed 10 along its normal.
    #[default]
    Consistent,
    /// `1/6 + sqrt(3)(1 + 20 t)`; past the right edge of the domain for every t >= 0.
    Alternate,
}

impl DmrFront {
    pub fn position<T: Real>(self, t: T) -> T {
        let s3 = T::lit(3.0).sqrt();
        let travel = T::one() + T::lit(20.0) * t;
        T::lit(1.0 / 6.0)
            + match self {
                DmrFront::Consistent => travel / s3,
                DmrFront::Alternate => travel * s3,
            }
    }
}

impl FromStr for DmrFront {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "alternate" => Ok(Self::Alternate),
            other => Err(format!("unknown dmr front `{other}` (consistent|alternate)")),
        }
    }
}

impl fmt::Display for DmrFront {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DmrFront::Consistent => "consistent",
            DmrFront::Alternate => "alternate",
        })
    }
}

/// Top-boundary state at abscissa `x` and time `t`.
pub fn dmr_top_state<T: Real>(front: DmrFront, x: T, t: T) -> PrimState<T, 2> {
    if x < front.position(t) {
        dmr_post_shock()
    } else {
        dmr_pre_shock()
    }
}

pub fn double_mach_reflection<T: Real>() -> Problem<T, 2> {
    double_mach_reflection_with(DmrFront::default())
}

pub fn double_mach_reflection_with<T: Real>(front: DmrFront) -> Problem<T, 2> {
    let post = dmr_post_shock();
    let pre = dmr_pre_shock();
    let sixth = T::lit(1.0 / 6.0);
    let s3 = T::lit(3.0).sqrt();
    Problem {
        name: "dmr",
        domain: [(T::zero(), T::lit(4.0)), (T::zero(), T::one())],
        default_cells: [480, 120],
        ic: Arc::new(move |p: &[T; 2]| if p[0] < sixth + p[1] / s3 { post } else { pre }),
        boundaries: [
            [BoundaryCondition::SupersonicInflow(post), BoundaryCondition::NeumannOutflow],
            [
                BoundaryCondition::Piecewise(vec![
                    (sixth, BoundaryCondition::SupersonicInflow(post)),
                    (T::infinity(), BoundaryCondition::ReflectiveWall),
                ]),
                BoundaryCondition::DirichletExact(Arc::new(move |p: &[T; 2], t: T| dmr_top_state(front, p[0], t))),
            ],
        ],
        gas: air(),
        t_end: T::lit(0.2),
        active: None,
        reference: Reference::None,
    }
}

/// Problem names accepted in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Smooth1d,
    Vortex2d,
    Sod,
    DoubleShock,
    Blast,
    Step,
    Dmr,
}

impl ProblemName {
    pub const ALL: [ProblemName; 7] = [
        Self::Smooth1d,
        Self::Vortex2d,
        Self::Sod,
        Self::DoubleShock,
        Self::Blast,
        Self::Step,
        Self::Dmr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Smooth1d => "smooth1d",
            Self::Vortex2d => "vortex2d",
            Self::Sod => "sod",
            Self::DoubleShock => "double_shock",
            Self::Blast => "blast",
            Self::Step => "step",
            Self::Dmr => "dmr",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Self::Vortex2d | Self::Step | Self::Dmr => 2,
            _ => 1,
        }
    }

    pub fn build<T: Real>(self, front: DmrFront) -> AnyProblem<T> {
        match self {
            Self::Smooth1d => AnyProblem::OneD(smooth_euler_1d()),
            Self::Sod => AnyProblem::OneD(sod_shock_tube()),
            Self::DoubleShock => AnyProblem::OneD(double_shock()),
            Self::Blast => AnyProblem::OneD(blast_wave()),
            Self::Vortex2d => AnyProblem::TwoD(isentropic_vortex_2d()),
            Self::Step => AnyProblem::TwoD(wind_tunnel_step()),
            Self::Dmr => AnyProblem::TwoD(double_mach_reflection_with(front)),
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ProblemError::UnknownName(s.to_string()))
    }
}

/// A problem of either dimension, for dispatch by name.
#[derive(Clone)]
pub enum AnyProblem<T> {
    OneD(Problem<T, 1>),
    TwoD(Problem<T, 2>),
}

impl<T: Real> fmt::Debug for AnyProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OneD(p) => p.fmt(f),
            Self::TwoD(p) => p.fmt(f),
        }
    }
}

impl<T: Real> AnyProblem<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OneD(p) => p.name,
            Self::TwoD(p) => p.name,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::OneD(_) => 1,
            Self::TwoD(_) => 2,
        }
    }

    pub fn default_cells(&self) -> Vec<usize> {
        match self {
            Self::OneD(p) => p.default_cells.to_vec(),
            Self::TwoD(p) => p.default_cells.to_vec(),
        }
    }

    pub fn t_end(&self) -> T {
        match self {
            Self::OneD(p) => p.t_end,
            Self::TwoD(p) => p.t_end,
        }
    }
}
