//! MUSCL finite-volume semi-discretization of the Euler equations on
//! tensor-product non-uniform grids, advanced with two-stage TVD Runge-Kutta.
//!
//! The residual is assembled line by line: every maximal run of active cells
//! along an axis gets two ghost layers per side, its own cached limiter
//! parameters, and Roe fluxes at its faces. Runs that end next to a blanked
//! cell see a reflective wall there. Both axis contributions are summed into a
//! single residual (unsplit method of lines).

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::euler::{
    axis_wave_speed, cons_to_prim, prim_to_cons, roe_flux, ConsState, EntropyFix, EulerError, GasModel, PrimState,
};
use crate::limiters::{LimiterError, LimiterFamily, LimiterKind, LimiterParams};
use crate::mesh::{cell_params, Grid1D, MeshError};
use crate::real::Real;

/// Time-dependent boundary data, called with a ghost-cell center and the time.
pub type StateFn<T, const D: usize> = Arc<dyn Fn(&[T; D], T) -> PrimState<T, D> + Send + Sync>;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("non-physical state in cell {cell:?} at {position:?} (step {step}, t={t}): {source}")]
    NonPhysicalCell {
        cell: Vec<usize>,
        position: Vec<f64>,
        step: usize,
        t: f64,
        source: EulerError,
    },
    #[error("non-physical face state on axis {axis} next to cell {cell:?} at {position:?} (step {step}, t={t}): {source}")]
    NonPhysicalFace {
        axis: usize,
        cell: Vec<usize>,
        position: Vec<f64>,
        step: usize,
        t: f64,
        source: EulerError,
    },
    #[error("time step collapsed to {dt} at t={t} (step {step})")]
    BadTimeStep { dt: f64, t: f64, step: usize },
    #[error("periodic boundary on axis {0} needs periodic conditions on both sides and no blanked cells")]
    BadPeriodic(usize),
    #[error("mask has {found} entries, mesh has {expected} cells")]
    MaskSize { expected: usize, found: usize },
    #[error("field has {found} cells, mesh has {expected}")]
    FieldSize { expected: usize, found: usize },
    #[error("cfl must lie in (0, 1], got {0}")]
    BadCfl(f64),
    #[error("piecewise boundary condition has no pieces")]
    EmptyPiecewise,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Limiter(#[from] LimiterError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// Boundary condition on one side of the domain.
#[derive(Clone)]
pub enum BoundaryCondition<T, const D: usize> {
    Periodic,
    ReflectiveWall,
    SupersonicInflow(PrimState<T, D>),
    NeumannOutflow,
    DirichletExact(StateFn<T, D>),
    /// Picks a condition by the transverse coordinate of the boundary cell:
    /// `(upper, bc)` applies below `upper`, the last piece covers the rest.
    Piecewise(Vec<(T, BoundaryCondition<T, D>)>),
}

impl<T: Real, const D: usize> fmt::Debug for BoundaryCondition<T, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Periodic => write!(f, "Periodic"),
            Self::ReflectiveWall => write!(f, "ReflectiveWall"),
            Self::SupersonicInflow(q) => write!(f, "SupersonicInflow({q:?})"),
            Self::NeumannOutflow => write!(f, "NeumannOutflow"),
            Self::DirichletExact(_) => write!(f, "DirichletExact(..)"),
            Self::Piecewise(p) => f.debug_list().entries(p.iter().map(|(u, bc)| (u, bc))).finish(),
        }
    }
}

/// Low and high side conditions for each axis.
pub type Boundaries<T, const D: usize> = [[BoundaryCondition<T, D>; 2]; D];

/// Which variables are limited component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LimitVars {
    #[default]
    Conservative,
    Primitive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub limiter: LimiterKind,
    pub limit_vars: LimitVars,
    pub entropy_fix: EntropyFix,
    pub gas: GasModel<T>,
    /// Drop to first order in any cell whose reconstructed face states are non-physical.
    pub positivity_fallback: bool,
}

impl<T: Real> SolverOptions<T> {
    pub fn new(limiter: LimiterKind) -> Self {
        Self {
            limiter,
            limit_vars: LimitVars::default(),
            entropy_fix: EntropyFix::default(),
            gas: GasModel::air(),
            positivity_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls<T> {
    cfl: T,
    t_end: T,
    max_steps: usize,
}

impl<T: Real> TimeControls<T> {
    pub fn new(cfl: T, t_end: T) -> Result<Self, SolverError> {
        if !(cfl > T::zero() && cfl <= T::one()) {
            return Err(SolverError::BadCfl(cfl.to_f64_lossy()));
        }
        Ok(Self {
            cfl,
            t_end,
            max_steps: usize::MAX,
        })
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn cfl(&self) -> T {
        self.cfl
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }
}

/// Cell averages on a mesh of `dims` cells (x index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T, const D: usize> {
    dims: [usize; D],
    values: Vec<ConsState<T, D>>,
    mask: Option<Arc<Vec<bool>>>,
}

impl<T: Real, const D: usize> Field<T, D> {
    pub fn dims(&self) -> [usize; D] {
        self.dims
    }

    pub fn values(&self) -> &[ConsState<T, D>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [ConsState<T, D>] {
        &mut self.values
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[cell])
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&c| self.is_active(c))
    }
}

/// The grids along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T, const D: usize> {
    axes: [Grid1D<T>; D],
}

impl<T: Real, const D: usize> Mesh<T, D> {
    pub fn new(axes: [Grid1D<T>; D]) -> Self {
        Self { axes }
    }

    pub fn axis(&self, a: usize) -> &Grid1D<T> {
        &self.axes[a]
    }

    pub fn dims(&self) -> [usize; D] {
        std::array::from_fn(|a| self.axes[a].len())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Grid1D::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear(&self, idx: &[usize; D]) -> usize {
        let mut lin = 0;
        for a in (0..D).rev() {
            lin = lin * self.axes[a].len() + idx[a];
        }
        lin
    }

    pub fn multi(&self, mut lin: usize) -> [usize; D] {
        std::array::from_fn(|a| {
            let n = self.axes[a].len();
            let i = lin % n;
            lin /= n;
            i
        })
    }

    pub fn center(&self, lin: usize) -> [T; D] {
        let idx = self.multi(lin);
        std::array::from_fn(|a| self.axes[a].centers()[idx[a]])
    }

    pub fn volume(&self, lin: usize) -> T {
        let idx = self.multi(lin);
        (0..D).map(|a| self.axes[a].sizes()[idx[a]]).fold(T::one(), |v, s| v * s)
    }
}

/// How the ghost layers of one run end are filled.
#[derive(Clone)]
enum GhostRule<T, const D: usize> {
    /// Copies of the cells at the other end of the (full, periodic) line.
    Periodic,
    Wall,
    Neumann,
    Inflow(ConsState<T, D>),
    Dirichlet(StateFn<T, D>),
}

/// One run of active cells along an axis, with cached geometry.
struct LinePlan<T, const D: usize> {
    axis: usize,
    cells: Vec<usize>,
    inv_dx: Vec<T>,
    /// Limiter parameters of extended cells `1..=m+2` (one ghost per side).
    params: Vec<LimiterParams<T>>,
    rules: [GhostRule<T, D>; 2],
    /// Ghost centers, `[side][layer]`, layer 0 adjacent to the run.
    ghost_centers: [[[T; D]; 2]; 2],
}

const LOW: usize = 0;
const HIGH: usize = 1;

/// Semi-discrete operator plus time stepping for one mesh and boundary set.
pub struct Solver<T, const D: usize> {
    mesh: Mesh<T, D>,
    mask: Option<Arc<Vec<bool>>>,
    options: SolverOptions<T>,
    plans: Vec<LinePlan<T, D>>,
}

fn resolve<T: Real, const D: usize>(
    bc: &BoundaryCondition<T, D>,
    transverse: Option<T>,
    gas: &GasModel<T>,
) -> Result<GhostRule<T, D>, SolverError> {
    Ok(match bc {
        BoundaryCondition::Periodic => GhostRule::Periodic,
        BoundaryCondition::ReflectiveWall => GhostRule::Wall,
        BoundaryCondition::NeumannOutflow => GhostRule::Neumann,
        BoundaryCondition::SupersonicInflow(q) => GhostRule::Inflow(prim_to_cons(q, gas)),
        BoundaryCondition::DirichletExact(f) => GhostRule::Dirichlet(f.clone()),
        BoundaryCondition::Piecewise(pieces) => {
            let (_, last) = pieces.last().ok_or(SolverError::EmptyPiecewise)?;
            let chosen = match transverse {
                Some(c) => pieces.iter().find(|(upper, _)| c < *upper).map(|(_, bc)| bc).unwrap_or(last),
                None => last,
            };
            resolve(chosen, transverse, gas)?
        }
    })
}

impl<T: Real, const D: usize> Solver<T, D> {
    pub fn new(
        mesh: Mesh<T, D>,
        boundaries: &Boundaries<T, D>,
        mask: Option<Vec<bool>>,
        options: SolverOptions<T>,
    ) -> Result<Self, SolverError> {
        if let Some(m) = &mask {
            if m.len() != mesh.len() {
                return Err(SolverError::MaskSize {
                    expected: mesh.len(),
                    found: m.len(),
                });
            }
        }
        for (a, sides) in boundaries.iter().enumerate() {
            let periodic = sides.iter().map(|bc| matches!(bc, BoundaryCondition::Periodic)).collect::<Vec<_>>();
            if periodic.iter().any(|&p| p) && (!periodic.iter().all(|&p| p) || mask.is_some()) {
                return Err(SolverError::BadPeriodic(a));
            }
        }
        let mask = mask.map(Arc::new);
        let mut solver = Self {
            mesh,
            mask,
            options,
            plans: Vec::new(),
        };
        solver.plans = solver.build_plans(boundaries)?;
        Ok(solver)
    }

    pub fn mesh(&self) -> &Mesh<T, D> {
        &self.mesh
    }

    pub fn options(&self) -> &SolverOptions<T> {
        &self.options
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref().map(Vec::as_slice)
    }

    fn active(&self, lin: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[lin])
    }

    fn build_plans(&self, boundaries: &Boundaries<T, D>) -> Result<Vec<LinePlan<T, D>>, SolverError> {
        let dims = self.mesh.dims();
        let mut plans = Vec::new();
        for axis in 0..D {
            let n = dims[axis];
            let grid = self.mesh.axis(axis);
            let lines: usize = dims.iter().enumerate().filter(|&(a, _)| a != axis).map(|(_, &d)| d).product();
            for line in 0..lines {
                // multi-index of the line start, walking the transverse axes
                let mut rest = line;
                let mut idx = [0usize; D];
                for (a, slot) in idx.iter_mut().enumerate() {
                    if a != axis {
                        *slot = rest % dims[a];
                        rest /= dims[a];
                    }
                }
                let transverse = (0..D).find(|&a| a != axis).map(|a| self.mesh.axis(a).centers()[idx[a]]);
                let cell_at = |i: usize| {
                    let mut k = idx;
                    k[axis] = i;
                    self.mesh.linear(&k)
                };
                let mut i = 0;
                while i < n {
                    if !self.active(cell_at(i)) {
                        i += 1;
                        continue;
                    }
                    let start = i;
                    while i < n && self.active(cell_at(i)) {
                        i += 1;
                    }
                    let end = i;
                    let low = if start == 0 {
                        resolve(&boundaries[axis][LOW], transverse, &self.options.gas)?
                    } else {
                        GhostRule::Wall
                    };
                    let high = if end == n {
                        resolve(&boundaries[axis][HIGH], transverse, &self.options.gas)?
                    } else {
                        GhostRule::Wall
                    };
                    let cells: Vec<usize> = (start..end).map(cell_at).collect();
                    plans.push(self.plan_run(axis, grid, start, end, cells, [low, high], &idx)?);
                }
            }
        }
        Ok(plans)
    }

    #[allow(clippy::too_many_arguments)]
    fn plan_run(
        &self,
        axis: usize,
        grid: &Grid1D<T>,
        start: usize,
        end: usize,
        cells: Vec<usize>,
        rules: [GhostRule<T, D>; 2],
        idx: &[usize; D],
    ) -> Result<LinePlan<T, D>, SolverError> {
        let sizes = &grid.sizes()[start..end];
        let m = sizes.len();
        let n = grid.len();
        let ghost_sizes = |side: usize| -> [T; 2] {
            let inner = |k: usize| if side == LOW { sizes[k.min(m - 1)] } else { sizes[m - 1 - k.min(m - 1)] };
            match rules[side] {
                GhostRule::Periodic => {
                    let all = grid.sizes();
                    if side == LOW {
                        [all[n - 1], all[(2 * n - 2) % n]]
                    } else {
                        [all[0], all[1 % n]]
                    }
                }
                GhostRule::Neumann => [inner(0), inner(0)],
                _ => [inner(0), inner(1)],
            }
        };
        let gl = ghost_sizes(LOW);
        let gh = ghost_sizes(HIGH);
        let mut dx_ext = Vec::with_capacity(m + 4);
        dx_ext.push(gl[1]);
        dx_ext.push(gl[0]);
        dx_ext.extend_from_slice(sizes);
        dx_ext.push(gh[0]);
        dx_ext.push(gh[1]);

        let kind = self.options.limiter;
        let params = (1..=m + 2)
            .map(|j| {
                let (a, b) = cell_params(dx_ext[j - 1], dx_ext[j], dx_ext[j + 1]);
                kind.params(a, b)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let faces = grid.faces();
        let (lo_face, hi_face) = (faces[start], faces[end]);
        let center_at = |x: T| -> [T; D] {
            std::array::from_fn(|a| if a == axis { x } else { self.mesh.axis(a).centers()[idx[a]] })
        };
        let half = T::half();
        let ghost_centers = [
            [center_at(lo_face - half * gl[0]), center_at(lo_face - gl[0] - half * gl[1])],
            [center_at(hi_face + half * gh[0]), center_at(hi_face + gh[0] + half * gh[1])],
        ];
        Ok(LinePlan {
            axis,
            inv_dx: sizes.iter().map(|&s| s.recip()).collect(),
            cells,
            params,
            rules,
            ghost_centers,
        })
    }

    /// Samples `ic` at cell centers (blanked cells included).
    pub fn initial_field(&self, ic: impl Fn(&[T; D]) -> PrimState<T, D>) -> Field<T, D> {
        let gas = self.options.gas;
        let values = (0..self.mesh.len()).map(|c| prim_to_cons(&ic(&self.mesh.center(c)), &gas)).collect();
        Field {
            dims: self.mesh.dims(),
            values,
            mask: self.mask.clone(),
        }
    }

    /// Wraps existing cell averages.
    pub fn field_from_values(&self, values: Vec<ConsState<T, D>>) -> Result<Field<T, D>, SolverError> {
        if values.len() != self.mesh.len() {
            return Err(SolverError::FieldSize {
                expected: self.mesh.len(),
                found: values.len(),
            });
        }
        Ok(Field {
            dims: self.mesh.dims(),
            values,
            mask: self.mask.clone(),
        })
    }

    fn ghost(&self, plan: &LinePlan<T, D>, values: &[ConsState<T, D>], side: usize, layer: usize, t: T) -> ConsState<T, D> {
        let m = plan.cells.len();
        let inner = |k: usize| {
            let k = k.min(m - 1);
            values[plan.cells[if side == LOW { k } else { m - 1 - k }]]
        };
        match &plan.rules[side] {
            GhostRule::Periodic => {
                let k = if side == LOW { m - 1 - layer.min(m - 1) } else { layer.min(m - 1) };
                values[plan.cells[k]]
            }
            GhostRule::Wall => inner(layer).reflected(plan.axis),
            GhostRule::Neumann => inner(0),
            GhostRule::Inflow(w) => *w,
            GhostRule::Dirichlet(f) => prim_to_cons(&f(&plan.ghost_centers[side][layer], t), &self.options.gas),
        }
    }

    fn locate_cell(&self, lin: usize, step: usize, t: T, source: EulerError) -> SolverError {
        SolverError::NonPhysicalCell {
            cell: self.mesh.multi(lin).to_vec(),
            position: self.mesh.center(lin).iter().map(|x| x.to_f64_lossy()).collect(),
            step,
            t: t.to_f64_lossy(),
            source,
        }
    }

    /// Face fluxes of one run (`m + 1` entries) and the number of cells that fell back to first order.
    #[allow(clippy::type_complexity)]
    fn line_fluxes(
        &self,
        plan: &LinePlan<T, D>,
        values: &[ConsState<T, D>],
        t: T,
    ) -> Result<(Vec<ConsState<T, D>>, usize), (usize, EulerError)> {
        let m = plan.cells.len();
        let gas = &self.options.gas;
        let mut ext = Vec::with_capacity(m + 4);
        ext.push(self.ghost(plan, values, LOW, 1, t));
        ext.push(self.ghost(plan, values, LOW, 0, t));
        ext.extend(plan.cells.iter().map(|&c| values[c]));
        ext.push(self.ghost(plan, values, HIGH, 0, t));
        ext.push(self.ghost(plan, values, HIGH, 1, t));

        let kind = self.options.limiter;
        let primitive = self.options.limit_vars == LimitVars::Primitive;
        // variables being limited; primitive states are packed into the same layout
        let vars: Vec<ConsState<T, D>> = if primitive {
            ext.iter()
                .enumerate()
                .map(|(j, w)| {
                    cons_to_prim(w, gas)
                        .map(|q| ConsState::new(q.rho, q.vel, q.p))
                        .map_err(|e| (j.saturating_sub(2).min(m - 1), e))
                })
                .collect::<Result<_, _>>()?
        } else {
            ext.clone()
        };
        let unpack = |v: ConsState<T, D>| -> ConsState<T, D> {
            if primitive {
                prim_to_cons(&PrimState::new(v.rho, v.mom, v.energy), gas)
            } else {
                v
            }
        };
        let physical = |v: ConsState<T, D>| {
            if primitive {
                v.rho > T::zero() && v.energy > T::zero()
            } else {
                v.is_physical(gas)
            }
        };
        let mut half_jump = vec![ConsState::zero(); m + 4];
        let mut fallbacks = 0;
        if kind.family != LimiterFamily::None {
            for j in 1..=m + 2 {
                let params = &plan.params[j - 1];
                let mut hj = ConsState::zero();
                for k in 0..ConsState::<T, D>::NVARS {
                    let dl = vars[j][k] - vars[j - 1][k];
                    let dr = vars[j + 1][k] - vars[j][k];
                    if dr != T::zero() {
                        hj[k] = T::half() * kind.eval(params, dl / dr) * dr;
                    }
                }
                if self.options.positivity_fallback && !(physical(vars[j] + hj) && physical(vars[j] - hj)) {
                    if (2..m + 2).contains(&j) {
                        fallbacks += 1;
                    }
                    hj = ConsState::zero();
                }
                half_jump[j] = hj;
            }
        }
        let fluxes = (0..=m)
            .map(|f| {
                let left = unpack(vars[f + 1] + half_jump[f + 1]);
                let right = unpack(vars[f + 2] - half_jump[f + 2]);
                roe_flux(&left, &right, gas, plan.axis, self.options.entropy_fix).map_err(|e| (f.min(m - 1), e))
            })
            .collect::<Result<_, _>>()?;
        Ok((fluxes, fallbacks))
    }

    /// `dU/dt` on every cell (zero on blanked cells).
    pub fn residual(&self, field: &Field<T, D>, t: T) -> Result<Vec<ConsState<T, D>>, SolverError> {
        self.residual_at(field, t, 0).map(|(r, _)| r)
    }

    fn residual_at(&self, field: &Field<T, D>, t: T, step: usize) -> Result<(Vec<ConsState<T, D>>, usize), SolverError> {
        let values = &field.values;
        let contributions: Vec<(Vec<ConsState<T, D>>, usize)> = self
            .plans
            .par_iter()
            .map(|plan| {
                let (fluxes, fallbacks) = self.line_fluxes(plan, values, t).map_err(|(k, source)| {
                    let lin = plan.cells[k];
                    SolverError::NonPhysicalFace {
                        axis: plan.axis,
                        cell: self.mesh.multi(lin).to_vec(),
                        position: self.mesh.center(lin).iter().map(|x| x.to_f64_lossy()).collect(),
                        step,
                        t: t.to_f64_lossy(),
                        source,
                    }
                })?;
                let res = fluxes
                    .windows(2)
                    .zip(&plan.inv_dx)
                    .map(|(f, &inv)| (f[1] - f[0]) * -inv)
                    .collect();
                Ok((res, fallbacks))
            })
            .collect::<Result<_, SolverError>>()?;
        let mut res = vec![ConsState::zero(); values.len()];
        let mut fallbacks = 0;
        // plans are ordered by axis, so each cell sums its x part before its y part
        for (plan, (contrib, n)) in self.plans.iter().zip(contributions) {
            fallbacks += n;
            for (&c, r) in plan.cells.iter().zip(contrib) {
                res[c] = res[c] + r;
            }
        }
        Ok((res, fallbacks))
    }

    /// `cfl / max_cells sum_a (|u_a| + c) / h_a`.
    pub fn stable_dt(&self, field: &Field<T, D>, cfl: T) -> Result<T, SolverError> {
        let gas = &self.options.gas;
        let inv_h: [T; D] = std::array::from_fn(|a| self.mesh.axis(a).reference_size().recip());
        let mut max_rate = T::zero();
        for c in field.active_cells() {
            let w = &field.values[c];
            let mut rate = T::zero();
            for (a, &ih) in inv_h.iter().enumerate() {
                rate += axis_wave_speed(w, gas, a).map_err(|e| self.locate_cell(c, 0, T::zero(), e))? * ih;
            }
            max_rate = max_rate.max(rate);
        }
        Ok(cfl / max_rate)
    }

    fn check_physical(&self, values: &[ConsState<T, D>], step: usize, t: T) -> Result<(), SolverError> {
        let gas = &self.options.gas;
        let bad = (0..values.len())
            .into_par_iter()
            .filter(|&c| self.active(c))
            .find_first(|&c| !values[c].is_physical(gas) || values[c].components().any(|x| !x.is_finite()));
        match bad {
            Some(c) => {
                let source = cons_to_prim(&values[c], gas).err().unwrap_or(EulerError::NonPhysical {
                    rho: values[c].rho.to_f64_lossy(),
                    p: f64::NAN,
                });
                Err(self.locate_cell(c, step, t, source))
            }
            None => Ok(()),
        }
    }

    /// One TVD-RK2 (Heun) step of size `dt` from time `t`; returns the number of
    /// first-order fallbacks over both stages.
    pub fn advance_tvd_rk2(&self, field: &mut Field<T, D>, t: T, dt: T) -> Result<usize, SolverError> {
        self.advance_step(field, t, dt, 0)
    }

    fn advance_step(&self, field: &mut Field<T, D>, t: T, dt: T, step: usize) -> Result<usize, SolverError> {
        let (l0, f0) = self.residual_at(field, t, step)?;
        let u0 = field.values.clone();
        let mut stage = field.clone();
        for ((s, &u), r) in stage.values.iter_mut().zip(&u0).zip(&l0) {
            *s = u + *r * dt;
        }
        self.check_physical(&stage.values, step, t + dt)?;
        let (l1, f1) = self.residual_at(&stage, t + dt, step)?;
        let half = T::half();
        for (((out, &u), &s), r) in field.values.iter_mut().zip(&u0).zip(&stage.values).zip(&l1) {
            *out = (u + s + *r * dt) * half;
        }
        self.check_physical(&field.values, step, t + dt)?;
        Ok(f0 + f1)
    }

    /// Per-step density variation, extrema of density and pressure.
    pub fn step_record(&self, field: &Field<T, D>, step: usize, t: T, dt: T) -> StepRecord<T> {
        let gas = &self.options.gas;
        let mut tv = T::zero();
        for plan in &self.plans {
            for w in plan.cells.windows(2) {
                tv += (field.values[w[1]].rho - field.values[w[0]].rho).abs();
            }
        }
        let mut rec = StepRecord {
            step,
            t,
            dt,
            tv_rho: tv,
            min_rho: T::infinity(),
            max_rho: T::neg_infinity(),
            min_p: T::infinity(),
            max_p: T::neg_infinity(),
            fallbacks: 0,
        };
        for c in field.active_cells() {
            let w = &field.values[c];
            let p = w.pressure(gas);
            rec.min_rho = rec.min_rho.min(w.rho);
            rec.max_rho = rec.max_rho.max(w.rho);
            rec.min_p = rec.min_p.min(p);
            rec.max_p = rec.max_p.max(p);
        }
        rec
    }

    /// Advances from `t = 0` to `controls.t_end()`, stopping exactly at each
    /// requested output time and handing the field to `observer` there.
    pub fn run(
        &self,
        mut field: Field<T, D>,
        controls: &TimeControls<T>,
        output_times: &[T],
        mut observer: impl FnMut(T, &Field<T, D>) -> Result<(), SolverError>,
    ) -> Result<RunResult<T, D>, SolverError> {
        let t_end = controls.t_end;
        let mut outputs: Vec<T> = output_times.iter().copied().filter(|&o| o >= T::zero() && o <= t_end).collect();
        outputs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        outputs.dedup();
        let mut next_out = 0;
        let mut t = T::zero();
        let mut step = 0;
        self.check_physical(&field.values, 0, t)?;
        let mut history = vec![self.step_record(&field, 0, t, T::zero())];
        while next_out < outputs.len() && outputs[next_out] <= t {
            observer(t, &field)?;
            next_out += 1;
        }
        while t < t_end && step < controls.max_steps {
            let mut dt = self.stable_dt(&field, controls.cfl)?;
            if !(dt > T::zero()) || !dt.is_finite() {
                return Err(SolverError::BadTimeStep {
                    dt: dt.to_f64_lossy(),
                    t: t.to_f64_lossy(),
                    step,
                });
            }
            let target = if next_out < outputs.len() { outputs[next_out].min(t_end) } else { t_end };
            let landing = t + dt >= target;
            if landing {
                dt = target - t;
            }
            step += 1;
            let fallbacks = self.advance_step(&mut field, t, dt, step)?;
            t = if landing { target } else { t + dt };
            history.push(StepRecord {
                fallbacks,
                ..self.step_record(&field, step, t, dt)
            });
            while next_out < outputs.len() && outputs[next_out] <= t {
                observer(t, &field)?;
                next_out += 1;
            }
        }
        Ok(RunResult { field, t, steps: step, history })
    }

    /// Writes `x[,y],rho,u[,v],p,e` for every active cell.
    pub fn write_field_csv<W: Write>(&self, field: &Field<T, D>, out: W) -> Result<(), SolverError> {
        let gas = &self.options.gas;
        let mut w = csv::Writer::from_writer(out);
        let axes = ["x", "y", "z"];
        let vels = ["u", "v", "w"];
        let mut header: Vec<&str> = axes[..D].to_vec();
        header.push("rho");
        header.extend(&vels[..D]);
        header.extend(["p", "e"]);
        w.write_record(&header).map_err(csv_io)?;
        for c in field.active_cells() {
            let q = cons_to_prim(&field.values[c], gas)?;
            let mut rec: Vec<String> = self.mesh.center(c).iter().map(|x| x.to_string()).collect();
            rec.push(q.rho.to_string());
            rec.extend(q.vel.iter().map(|v| v.to_string()));
            rec.push(q.p.to_string());
            rec.push(gas.internal_energy(q.rho, q.p).to_string());
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> SolverError {
    SolverError::Io(std::io::Error::other(e))
}

/// Diagnostics after one step (`step = 0` is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T> {
    pub step: usize,
    pub t: T,
    pub dt: T,
    pub tv_rho: T,
    pub min_rho: T,
    pub max_rho: T,
    pub min_p: T,
    pub max_p: T,
    /// Cells limited to first order by the positivity fallback during the step.
    pub fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult<T, const D: usize> {
    pub field: Field<T, D>,
    pub t: T,
    pub steps: usize,
    pub history: Vec<StepRecord<T>>,
}

/// Writes `step,t,dt,tv_rho,min_rho,min_p`.
pub fn write_diagnostics_csv<T: Real, W: Write>(history: &[StepRecord<T>], out: W) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "t", "dt", "tv_rho", "min_rho", "min_p"]).map_err(csv_io)?;
    for r in history {
        w.write_record([
            r.step.to_string(),
            r.t.to_string(),
            r.dt.to_string(),
            r.tv_rho.to_string(),
            r.min_rho.to_string(),
            r.min_p.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
