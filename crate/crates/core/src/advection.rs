//! Exact reconstruct-evolve-project (REP) steps for `u_t + c u_x = 0` on
//! non-uniform grids.
//!
//! This is the scalar oracle: a piecewise-linear reconstruction is translated
//! exactly by `c dt` and projected back onto the cells. Besides the update it
//! reports the incremental-form (Harten) coefficients, total variations and
//! the equivalent flux limiters, so TVD, symmetry and accuracy claims can be
//! checked numerically.
//!
//! Boundaries are periodic by default. [`AdvectionBoundary::LinearExtrapolation`]
//! fills two ghost cells per side (sizes mirrored) with values on the line
//! through the two outermost cells, which keeps linear data exactly linear.

use thiserror::Error;

use crate::limiters::{CellLimiter, LimiterError};
use crate::mesh::{cell_params, Grid1D};
use crate::real::Real;

const GHOSTS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdvectionError {
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need at least 3 cells, grid has {0}")]
    TooFewCells(usize),
    #[error("Courant number {lambda} in cell {index} is outside [0, 1]")]
    CourantOutOfRange { index: isize, lambda: f64 },
    #[error("time step and speed must be finite with dt >= 0 (got c={c}, dt={dt})")]
    InvalidStep { c: f64, dt: f64 },
    #[error("face {face} needs neighbours outside a grid of {cells} cells")]
    FaceOutOfRange { face: usize, cells: usize },
    #[error(transparent)]
    Limiter(#[from] LimiterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionBoundary {
    #[default]
    Periodic,
    LinearExtrapolation,
}

/// Direction of the advection speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upwind {
    Left,
    Right,
}

impl Upwind {
    /// `Left` for `c >= 0` (information flows to the right).
    pub fn of<T: Real>(c: T) -> Self {
        if c >= T::zero() {
            Upwind::Left
        } else {
            Upwind::Right
        }
    }
}

/// Cell averages, speed and time step of one REP step.
#[derive(Debug, Clone)]
pub struct RepState<T> {
    grid: Grid1D<T>,
    u: Vec<T>,
    c: T,
    dt: T,
    lambda: Vec<T>,
    boundary: AdvectionBoundary,
}

impl<T: Real> RepState<T> {
    pub fn new(grid: Grid1D<T>, u: Vec<T>, c: T, dt: T) -> Result<Self, AdvectionError> {
        Self::with_boundary(grid, u, c, dt, AdvectionBoundary::Periodic)
    }

    pub fn with_boundary(
        grid: Grid1D<T>,
        u: Vec<T>,
        c: T,
        dt: T,
        boundary: AdvectionBoundary,
    ) -> Result<Self, AdvectionError> {
        let n = grid.len();
        if n < 3 {
            return Err(AdvectionError::TooFewCells(n));
        }
        if u.len() != n {
            return Err(AdvectionError::LengthMismatch {
                expected: n,
                found: u.len(),
            });
        }
        if !c.is_finite() || !dt.is_finite() || dt < T::zero() {
            return Err(AdvectionError::InvalidStep {
                c: c.to_f64_lossy(),
                dt: dt.to_f64_lossy(),
            });
        }
        let lambda: Vec<T> = grid.sizes().iter().map(|&dx| c.abs() * dt / dx).collect();
        // ghost sizes are copies of interior sizes under both boundary kinds,
        // so checking the interior covers them
        for (index, &l) in lambda.iter().enumerate() {
            if !(l >= T::zero() && l <= T::one()) {
                return Err(AdvectionError::CourantOutOfRange {
                    index: index as isize,
                    lambda: l.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            grid,
            u,
            c,
            dt,
            lambda,
            boundary,
        })
    }

    /// State with the time step set so that the largest Courant number is `lambda_max`.
    pub fn with_courant(grid: Grid1D<T>, u: Vec<T>, c: T, lambda_max: T) -> Result<Self, AdvectionError> {
        let min_dx = grid.sizes().iter().copied().fold(T::infinity(), T::min);
        let dt = if c == T::zero() {
            T::zero()
        } else {
            lambda_max * min_dx / c.abs()
        };
        Self::new(grid, u, c, dt)
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn boundary(&self) -> AdvectionBoundary {
        self.boundary
    }

    /// Same grid, speed and step with new cell values.
    pub fn with_values(&self, u: Vec<T>) -> Result<Self, AdvectionError> {
        Self::with_boundary(self.grid.clone(), u, self.c, self.dt, self.boundary)
    }

    /// The mirrored problem: reversed cells and data, negated speed.
    pub fn mirrored(&self) -> Self {
        let mut u = self.u.clone();
        u.reverse();
        let mut lambda = self.lambda.clone();
        lambda.reverse();
        Self {
            grid: self.grid.mirrored(),
            u,
            c: -self.c,
            dt: self.dt,
            lambda,
            boundary: self.boundary,
        }
    }

    /// Values and sizes with [`GHOSTS`] ghost cells on each side.
    fn extended(&self) -> (Vec<T>, Vec<T>) {
        let n = self.u.len();
        let dx = self.grid.sizes();
        let mut ue = Vec::with_capacity(n + 2 * GHOSTS);
        let mut dxe = Vec::with_capacity(n + 2 * GHOSTS);
        match self.boundary {
            AdvectionBoundary::Periodic => {
                for j in 0..n + 2 * GHOSTS {
                    let i = (j + n - GHOSTS) % n;
                    ue.push(self.u[i]);
                    dxe.push(dx[i]);
                }
            }
            AdvectionBoundary::LinearExtrapolation => {
                // mirrored ghost sizes: dx[-1] = dx[0], dx[-2] = dx[1], ...
                for g in (0..GHOSTS).rev() {
                    dxe.push(dx[g]);
                }
                dxe.extend_from_slice(dx);
                for g in 0..GHOSTS {
                    dxe.push(dx[n - 1 - g]);
                }
                let left_slope = (self.u[1] - self.u[0]) / (T::half() * (dx[0] + dx[1]));
                let right_slope = (self.u[n - 1] - self.u[n - 2]) / (T::half() * (dx[n - 2] + dx[n - 1]));
                // distance from the boundary cell center to ghost centers
                let mut left = Vec::with_capacity(GHOSTS);
                let mut dist = T::zero();
                let mut prev = dx[0];
                for g in 0..GHOSTS {
                    dist += T::half() * (prev + dx[g]);
                    prev = dx[g];
                    left.push(self.u[0] - left_slope * dist);
                }
                left.reverse();
                ue.extend(left);
                ue.extend_from_slice(&self.u);
                let mut dist = T::zero();
                let mut prev = dx[n - 1];
                for g in 0..GHOSTS {
                    dist += T::half() * (prev + dx[n - 1 - g]);
                    prev = dx[n - 1 - g];
                    ue.push(self.u[n - 1] + right_slope * dist);
                }
            }
        }
        (ue, dxe)
    }
}

/// Limited slopes with one ghost cell on each side.
///
/// Entry `j` of the internal arrays belongs to cell `j - 1`; the accessors
/// return interior cells only.
#[derive(Debug, Clone, PartialEq)]
pub struct Slopes<T> {
    sigma: Vec<T>,
    theta: Vec<T>,
    phi: Vec<T>,
}

impl<T: Real> Slopes<T> {
    pub fn sigma(&self) -> &[T] {
        &self.sigma[1..self.sigma.len() - 1]
    }

    pub fn theta(&self) -> &[T] {
        &self.theta[1..self.theta.len() - 1]
    }

    pub fn phi(&self) -> &[T] {
        &self.phi[1..self.phi.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.sigma.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `sigma_i = phi_i(theta_i) (u_{i+1} - u_i) / dx_i`, with `phi_i` built from the
/// local grid ratios of cell `i`.
pub fn limited_slopes<T: Real, L: CellLimiter<T> + ?Sized>(
    state: &RepState<T>,
    limiter: &L,
) -> Result<Slopes<T>, AdvectionError> {
    let (ue, dxe) = state.extended();
    let m = ue.len() - 2;
    let mut sigma = Vec::with_capacity(m);
    let mut theta = Vec::with_capacity(m);
    let mut phi = Vec::with_capacity(m);
    for j in 1..ue.len() - 1 {
        let dl = ue[j] - ue[j - 1];
        let dr = ue[j + 1] - ue[j];
        let t = dl / dr;
        let (a, b) = cell_params(dxe[j - 1], dxe[j], dxe[j + 1]);
        let params = limiter.params(a, b)?;
        let p = if dr == T::zero() { T::zero() } else { limiter.phi(&params, t) };
        sigma.push(p * dr / dxe[j]);
        theta.push(t);
        phi.push(p);
    }
    Ok(Slopes { sigma, theta, phi })
}

/// Per-step instrumentation.
///
/// `c[i]` multiplies `u_i - u_{i-1}` and `d[i]` multiplies `u_{i+1} - u_i` in the
/// incremental form `u_i' = u_i - C_{i-1} (u_i - u_{i-1}) + D_i (u_{i+1} - u_i)`.
/// Face arrays have `n + 1` entries; entry `f` is the face between cells `f - 1` and `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepDiagnostics<T> {
    pub c: Vec<T>,
    pub d: Vec<T>,
    pub tv_before: T,
    pub tv_after: T,
    pub flux_limiter: Vec<T>,
    pub b_face: Vec<T>,
}

/// `phi / theta`, taken as zero where the limiter is off.
#[inline]
fn phi_over_theta<T: Real>(phi: T, theta: T) -> T {
    if phi == T::zero() || !theta.is_finite() || theta <= T::zero() {
        T::zero()
    } else {
        phi / theta
    }
}

/// One exact REP step.
pub fn rep_step<T: Real>(state: &RepState<T>, slopes: &Slopes<T>) -> Result<(Vec<T>, RepDiagnostics<T>), AdvectionError> {
    let n = state.u.len();
    if slopes.len() != n {
        return Err(AdvectionError::LengthMismatch {
            expected: n,
            found: slopes.len(),
        });
    }
    let (ue, dxe) = state.extended();
    let c = state.c;
    // extended index of interior cell i is i + GHOSTS; slope index is i + 1
    let u_at = |i: isize| ue[(i + GHOSTS as isize) as usize];
    let dx_at = |i: isize| dxe[(i + GHOSTS as isize) as usize];
    let s_at = |i: isize| slopes.sigma[(i + 1) as usize];
    let phi_at = |i: isize| slopes.phi[(i + 1) as usize];
    let th_at = |i: isize| slopes.theta[(i + 1) as usize];
    let lam_at = |i: isize| c.abs() * state.dt / dx_at(i);

    let mut next = Vec::with_capacity(n);
    let mut cc = vec![T::zero(); n];
    let mut dd = vec![T::zero(); n];
    let half = T::half();
    let one = T::one();
    for ii in 0..n {
        let i = ii as isize;
        let l = lam_at(i);
        let value = if c == T::zero() {
            u_at(i)
        } else if c > T::zero() {
            let lm = lam_at(i - 1);
            cc[ii] = l + half * l * (one - l) * phi_over_theta(phi_at(i), th_at(i)) - half * l * (one - lm) * phi_at(i - 1);
            u_at(i) - l * (u_at(i) - u_at(i - 1))
                - half * l * ((one - l) * dx_at(i) * s_at(i) - (one - lm) * dx_at(i - 1) * s_at(i - 1))
        } else {
            let lp = lam_at(i + 1);
            dd[ii] = l + half * l * (one - l) * phi_at(i) - half * l * (one - lp) * phi_over_theta(phi_at(i + 1), th_at(i + 1));
            u_at(i) + l * (u_at(i + 1) - u_at(i))
                + half * l * ((one - l) * dx_at(i) * s_at(i) - (one - lp) * dx_at(i + 1) * s_at(i + 1))
        };
        next.push(value);
    }

    let periodic = state.boundary == AdvectionBoundary::Periodic;
    let upwind = Upwind::of(c);
    let mut b_face = Vec::with_capacity(n + 1);
    let mut flux_limiter = Vec::with_capacity(n + 1);
    for f in 0..=n {
        let left = f as isize - 1;
        let (up, b) = match upwind {
            Upwind::Left => (left, face_b(dx_at(left), dx_at(left + 1))),
            Upwind::Right => (left + 1, face_b(dx_at(left + 1), dx_at(left + 2))),
        };
        b_face.push(b);
        flux_limiter.push(phi_at(up) / b);
    }
    let diag = RepDiagnostics {
        c: cc,
        d: dd,
        tv_before: total_variation(&state.u, periodic),
        tv_after: total_variation(&next, periodic),
        flux_limiter,
        b_face,
    };
    Ok((next, diag))
}

/// Limits slopes and takes one REP step.
pub fn rep_advance<T: Real, L: CellLimiter<T> + ?Sized>(
    state: &RepState<T>,
    limiter: &L,
) -> Result<(Vec<T>, RepDiagnostics<T>), AdvectionError> {
    let slopes = limited_slopes(state, limiter)?;
    rep_step(state, &slopes)
}

#[inline]
fn face_b<T: Real>(dx_up: T, dx_down: T) -> T {
    T::two() * dx_up / (dx_up + dx_down)
}

/// `B_{i+1/2}` for face `i + 1/2` (between cells `i` and `i + 1`).
///
/// `c > 0`: `2 dx_i / (dx_i + dx_{i+1})`; `c < 0`: `2 dx_{i+1} / (dx_{i+1} + dx_{i+2})`.
pub fn face_coefficient_b<T: Real>(grid: &Grid1D<T>, i: usize, upwind: Upwind) -> Result<T, AdvectionError> {
    let dx = grid.sizes();
    let need = match upwind {
        Upwind::Left => i + 1,
        Upwind::Right => i + 2,
    };
    if need >= dx.len() {
        return Err(AdvectionError::FaceOutOfRange { face: i, cells: dx.len() });
    }
    Ok(match upwind {
        Upwind::Left => face_b(dx[i], dx[i + 1]),
        Upwind::Right => face_b(dx[i + 1], dx[i + 2]),
    })
}

/// Flux limiter at face `i + 1/2` equivalent to the upwind cell's slope limiter value.
pub fn equivalent_flux_limiter<T: Real>(grid: &Grid1D<T>, phi: T, i: usize, upwind: Upwind) -> Result<T, AdvectionError> {
    Ok(phi / face_coefficient_b(grid, i, upwind)?)
}

/// Upwind fluxes `F_{f}` at the `n + 1` faces for the slope form of the scheme.
pub fn rep_fluxes<T: Real>(state: &RepState<T>, slopes: &Slopes<T>) -> Vec<T> {
    let n = state.u.len();
    let (ue, dxe) = state.extended();
    let c = state.c;
    let half = T::half();
    (0..=n)
        .map(|f| {
            // extended indices of the cells left and right of face f
            let l = f + GHOSTS - 1;
            let (up, sign) = if c >= T::zero() { (l, T::one()) } else { (l + 1, -T::one()) };
            let lam = c.abs() * state.dt / dxe[up];
            c * (ue[up] + sign * half * (T::one() - lam) * dxe[up] * slopes.sigma[up - 1])
        })
        .collect()
}

/// Fluxes rebuilt from the equivalent flux limiters and face coefficients.
pub fn flux_limited_fluxes<T: Real>(state: &RepState<T>, diag: &RepDiagnostics<T>) -> Vec<T> {
    let n = state.u.len();
    let (ue, dxe) = state.extended();
    let c = state.c;
    let half = T::half();
    (0..=n)
        .map(|f| {
            let l = f + GHOSTS - 1;
            let high = diag.flux_limiter[f] * diag.b_face[f];
            if c >= T::zero() {
                let lam = c * state.dt / dxe[l];
                c * ue[l] + half * high * c * (T::one() - lam) * (ue[l + 1] - ue[l])
            } else {
                let lam = -c * state.dt / dxe[l + 1];
                c * ue[l + 1] - half * high * c * (T::one() - lam) * (ue[l + 2] - ue[l + 1])
            }
        })
        .collect()
}

/// `u_i - dt / dx_i (F_{i+1/2} - F_{i-1/2})`.
pub fn conservative_update<T: Real>(state: &RepState<T>, fluxes: &[T]) -> Vec<T> {
    state
        .u
        .iter()
        .zip(state.grid.sizes())
        .enumerate()
        .map(|(i, (&u, &dx))| u - state.dt / dx * (fluxes[i + 1] - fluxes[i]))
        .collect()
}

/// `sum |u_{i+1} - u_i|`, including the wrap-around term when `periodic`.
pub fn total_variation<T: Real>(u: &[T], periodic: bool) -> T {
    let inner: T = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    match (periodic, u.first(), u.last()) {
        (true, Some(&first), Some(&last)) => inner + (first - last).abs(),
        _ => inner,
    }
}

/// Largest pointwise difference between one step of a problem and one step of
/// its mirror image, read back in the original cell order.
pub fn symmetry_pair_check<T: Real, L: CellLimiter<T> + ?Sized>(
    state: &RepState<T>,
    limiter: &L,
) -> Result<T, AdvectionError> {
    let (u, _) = rep_advance(state, limiter)?;
    let (v, _) = rep_advance(&state.mirrored(), limiter)?;
    Ok(u
        .iter()
        .zip(v.iter().rev())
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max))
}

/// Exact cell averages of the linear function `a + b x` on `grid`.
pub fn linear_cell_averages<T: Real>(grid: &Grid1D<T>, a: T, b: T) -> Vec<T> {
    grid.centers().iter().map(|&x| a + b * x).collect()
}
