//! Error norms, convergence rates on irregular meshes, and rate tables.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::euler::{cons_to_prim, PrimState};
use crate::limiters::{LimiterFamily, LimiterKind};
use crate::mesh::{MeshError, PerturbationParams};
use crate::problems::{isentropic_vortex_2d, smooth_euler_1d, vortex_exact, Problem};
use crate::real::Real;
use crate::solver::{Field, Mesh, Solver, SolverError, SolverOptions, TimeControls};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("length mismatch: {values} values, {reference} reference values, {weights} weights")]
    LengthMismatch { values: usize, reference: usize, weights: usize },
    #[error("rate needs positive errors and distinct positive sizes, got E=({e1}, {e2}), h=({h1}, {h2})")]
    BadRate { e1: f64, h1: f64, e2: f64, h2: f64 },
    #[error("reference needs at least two increasing sample points")]
    BadReference,
    #[error("rate study needs at least two mesh sizes")]
    TooFewSizes,
    #[error("unknown variable `{0}` (rho|u|v|p)")]
    UnknownVariable(String),
    #[error("rate studies support smooth1d and vortex2d, not `{0}`")]
    UnsupportedProblem(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Euler(#[from] crate::euler::EulerError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// A primitive variable an error is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    Rho,
    U,
    V,
    P,
}

impl Variable {
    pub fn for_dimension(d: usize) -> Vec<Variable> {
        if d == 1 {
            vec![Self::Rho, Self::U, Self::P]
        } else {
            vec![Self::Rho, Self::U, Self::V, Self::P]
        }
    }

    pub fn of<T: Real, const D: usize>(self, q: &PrimState<T, D>) -> T {
        match self {
            Self::Rho => q.rho,
            Self::U => q.vel[0],
            Self::V => q.vel[1],
            Self::P => q.p,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rho => "rho",
            Self::U => "u",
            Self::V => "v",
            Self::P => "p",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho" => Ok(Self::Rho),
            "u" => Ok(Self::U),
            "v" => Ok(Self::V),
            "p" => Ok(Self::P),
            other => Err(AnalysisError::UnknownVariable(other.to_string())),
        }
    }
}

/// `sum_i w_i |u_i - ref_i|`.
pub fn l1_error<T: Real>(values: &[T], reference: &[T], weights: &[T]) -> Result<T, AnalysisError> {
    if values.len() != reference.len() || values.len() != weights.len() {
        return Err(AnalysisError::LengthMismatch {
            values: values.len(),
            reference: reference.len(),
            weights: weights.len(),
        });
    }
    Ok(values.iter().zip(reference).zip(weights).map(|((&u, &r), &w)| w * (u - r).abs()).sum())
}

/// Cell-volume weighted L1 error of one variable over the active cells.
pub fn field_l1_error<T: Real, const D: usize>(
    solver: &Solver<T, D>,
    field: &Field<T, D>,
    reference: &[PrimState<T, D>],
    variable: Variable,
) -> Result<T, AnalysisError> {
    if reference.len() != field.values().len() {
        return Err(AnalysisError::LengthMismatch {
            values: field.values().len(),
            reference: reference.len(),
            weights: solver.mesh().len(),
        });
    }
    let gas = &solver.options().gas;
    let mut e = T::zero();
    for c in field.active_cells() {
        let q = cons_to_prim(&field.values()[c], gas)?;
        e += solver.mesh().volume(c) * (variable.of(&q) - variable.of(&reference[c])).abs();
    }
    Ok(e)
}

/// `(ln E1 - ln E2) / (ln h1 - ln h2)`.
pub fn convergence_rate<T: Real>(e1: T, h1: T, e2: T, h2: T) -> Result<T, AnalysisError> {
    let z = T::zero();
    if !(e1 > z && e2 > z && h1 > z && h2 > z) || h1 == h2 || !(e1 * e2 * h1 * h2).is_finite() {
        return Err(AnalysisError::BadRate {
            e1: e1.to_f64_lossy(),
            h1: h1.to_f64_lossy(),
            e2: e2.to_f64_lossy(),
            h2: h2.to_f64_lossy(),
        });
    }
    Ok((e1.ln() - e2.ln()) / (h1.ln() - h2.ln()))
}

/// Non-periodic total variation `sum |u_i - u_{i+1}|`.
pub fn total_variation<T: Real>(u: &[T]) -> T {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Total variation of every snapshot in a history.
pub fn tv_series<T: Real>(history: &[Vec<T>]) -> Vec<T> {
    history.iter().map(|u| total_variation(u)).collect()
}

/// Piecewise-linear interpolation of samples `(xs, ys)` at `targets`.
///
/// With `period = Some(L)` the samples wrap around; otherwise values beyond the
/// first and last samples are extrapolated from the end intervals.
pub fn interpolate_linear<T: Real>(xs: &[T], ys: &[T], targets: &[T], period: Option<T>) -> Result<Vec<T>, AnalysisError> {
    let n = xs.len();
    if n < 2 || ys.len() != n || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::BadReference);
    }
    let lerp = |x0: T, y0: T, x1: T, y1: T, x: T| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    Ok(targets
        .iter()
        .map(|&x| {
            let k = xs.partition_point(|&s| s <= x);
            match (k, period) {
                (0, Some(l)) => lerp(xs[n - 1] - l, ys[n - 1], xs[0], ys[0], x),
                (k, Some(l)) if k == n => lerp(xs[n - 1], ys[n - 1], xs[0] + l, ys[0], x),
                (0, None) => lerp(xs[0], ys[0], xs[1], ys[1], x),
                (k, None) if k == n => lerp(xs[n - 2], ys[n - 2], xs[n - 1], ys[n - 1], x),
                (k, _) => lerp(xs[k - 1], ys[k - 1], xs[k], ys[k], x),
            }
        })
        .collect())
}

/// Errors and successive-pair rates of several limiters on a mesh ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub limiters: Vec<String>,
    pub variables: Vec<Variable>,
    pub sizes: Vec<usize>,
    /// Reference cell size of each mesh.
    pub h: Vec<f64>,
    /// `errors[limiter][variable][mesh]`.
    pub errors: Vec<Vec<Vec<f64>>>,
    pub r: f64,
    pub seed: u64,
}

impl RateTable {
    /// Rates between successive meshes, `rates(l, v)[k]` between meshes `k` and `k + 1`.
    pub fn rates(&self, limiter: usize, variable: usize) -> Vec<Option<f64>> {
        let e = &self.errors[limiter][variable];
        (0..e.len().saturating_sub(1))
            .map(|k| convergence_rate(e[k], self.h[k], e[k + 1], self.h[k + 1]).ok())
            .collect()
    }

    pub fn finest_rate(&self, limiter: usize, variable: Variable) -> Option<f64> {
        let v = self.variables.iter().position(|&x| x == variable)?;
        self.rates(limiter, v).last().copied().flatten()
    }

    pub fn limiter_index(&self, name: &str) -> Option<usize> {
        self.limiters.iter().position(|l| l == name)
    }

    /// Finest-pair rates: one column per limiter, one row per variable.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["variable".to_string()];
        header.extend(self.limiters.iter().cloned());
        w.write_record(&header).map_err(csv_io)?;
        for (vi, v) in self.variables.iter().enumerate() {
            let mut row = vec![v.to_string()];
            for li in 0..self.limiters.len() {
                row.push(fmt_rate(self.rates(li, vi).last().copied().flatten()));
            }
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Every error and rate on the ladder in long form.
    pub fn write_ladder_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["limiter", "variable", "n", "h", "error", "rate"]).map_err(csv_io)?;
        for (li, l) in self.limiters.iter().enumerate() {
            for (vi, v) in self.variables.iter().enumerate() {
                let rates = self.rates(li, vi);
                for (k, &n) in self.sizes.iter().enumerate() {
                    let rate = if k == 0 { String::new() } else { fmt_rate(rates[k - 1]) };
                    w.write_record([
                        l.clone(),
                        v.to_string(),
                        n.to_string(),
                        format!("{:e}", self.h[k]),
                        format!("{:e}", self.errors[li][vi][k]),
                        rate,
                    ])
                    .map_err(csv_io)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Finest-pair rates as a Markdown table.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "|     |");
        for l in &self.limiters {
            let _ = write!(s, " {l} |");
        }
        s.push('\n');
        s.push_str("|-----|");
        for _ in &self.limiters {
            s.push_str("------|");
        }
        s.push('\n');
        for (vi, v) in self.variables.iter().enumerate() {
            let _ = write!(s, "| {v} |");
            for li in 0..self.limiters.len() {
                let _ = write!(s, " {} |", fmt_rate(self.rates(li, vi).last().copied().flatten()));
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "nan".to_string(), |r| format!("{r:.4}"))
}

fn csv_io(e: csv::Error) -> AnalysisError {
    AnalysisError::Io(std::io::Error::other(e))
}

/// Smooth problems a rate study can be run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateProblem {
    Smooth1d,
    Vortex2d,
}

impl FromStr for RateProblem {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smooth1d" => Ok(Self::Smooth1d),
            "vortex2d" => Ok(Self::Vortex2d),
            other => Err(AnalysisError::UnsupportedProblem(other.to_string())),
        }
    }
}

/// Settings shared by every run in a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub problem: RateProblem,
    pub sizes: Vec<usize>,
    pub r: f64,
    pub seed: u64,
    pub cfl: f64,
    /// Overrides the problem's end time.
    pub t_end: Option<f64>,
    /// Cells of the uniform fine-grid reference (1D only).
    pub reference_cells: usize,
    pub template: SolverOptions<f64>,
}

impl StudySettings {
    pub fn new(problem: RateProblem, sizes: Vec<usize>, r: f64, seed: u64) -> Self {
        Self {
            problem,
            sizes,
            r,
            seed,
            cfl: 0.6,
            t_end: None,
            reference_cells: 25_600,
            template: SolverOptions::new(LimiterKind::enhanced(LimiterFamily::Mc)),
        }
    }
}

fn perturbation(r: f64, seed: u64) -> Result<Option<PerturbationParams>, AnalysisError> {
    Ok(if r > 0.0 { Some(PerturbationParams::new(r, seed)?) } else { None })
}

fn final_prims<const D: usize>(solver: &Solver<f64, D>, field: &Field<f64, D>) -> Result<Vec<PrimState<f64, D>>, AnalysisError> {
    let gas = &solver.options().gas;
    Ok(field.values().iter().map(|w| cons_to_prim(w, gas)).collect::<Result<_, _>>()?)
}

fn run_to_end<const D: usize>(
    problem: &Problem<f64, D>,
    mesh: Mesh<f64, D>,
    options: SolverOptions<f64>,
    cfl: f64,
) -> Result<(Solver<f64, D>, Field<f64, D>), AnalysisError> {
    let mask = problem.mask(&mesh);
    let solver = Solver::new(mesh, &problem.boundaries, mask, options)?;
    let field = solver.initial_field(|x| (problem.ic)(x));
    let controls = TimeControls::new(cfl, problem.t_end)?;
    let out = solver.run(field, &controls, &[], |_, _| Ok(()))?;
    Ok((solver, out.field))
}

/// Fine-grid reference for the smooth 1D problem: cell centers and primitive states.
pub struct FineReference {
    pub centers: Vec<f64>,
    pub states: Vec<PrimState<f64, 1>>,
}

impl FineReference {
    pub fn compute(settings: &StudySettings) -> Result<Self, AnalysisError> {
        let mut problem = smooth_euler_1d::<f64>();
        if let Some(t) = settings.t_end {
            problem.t_end = t;
        }
        let mesh = problem.mesh([settings.reference_cells], None)?;
        let opts = SolverOptions {
            limiter: LimiterKind::enhanced(LimiterFamily::Mc),
            ..settings.template
        };
        let (solver, field) = run_to_end(&problem, mesh, opts, settings.cfl)?;
        Ok(Self {
            centers: solver.mesh().axis(0).centers().to_vec(),
            states: final_prims(&solver, &field)?,
        })
    }

    /// Reference states at `targets`, interpolated linearly with periodic wrap.
    pub fn sample(&self, targets: &[f64], period: f64) -> Result<Vec<PrimState<f64, 1>>, AnalysisError> {
        let pick = |f: fn(&PrimState<f64, 1>) -> f64| -> Result<Vec<f64>, AnalysisError> {
            let ys: Vec<f64> = self.states.iter().map(f).collect();
            interpolate_linear(&self.centers, &ys, targets, Some(period))
        };
        let rho = pick(|q| q.rho)?;
        let u = pick(|q| q.vel[0])?;
        let p = pick(|q| q.p)?;
        Ok((0..targets.len()).map(|i| PrimState::new(rho[i], [u[i]], p[i])).collect())
    }
}

/// Runs every limiter on every mesh and tabulates errors and rates.
///
/// Runs are independent and execute in parallel; `reference` is computed when
/// `None` and the problem needs one.
pub fn rate_study(
    settings: &StudySettings,
    kinds: &[LimiterKind],
    reference: Option<&FineReference>,
) -> Result<RateTable, AnalysisError> {
    if settings.sizes.len() < 2 {
        return Err(AnalysisError::TooFewSizes);
    }
    let pert = perturbation(settings.r, settings.seed)?;
    let jobs: Vec<(usize, usize)> = (0..kinds.len()).flat_map(|l| (0..settings.sizes.len()).map(move |k| (l, k))).collect();
    let (variables, h, results) = match settings.problem {
        RateProblem::Smooth1d => {
            let owned;
            let reference = match reference {
                Some(r) => r,
                None => {
                    owned = FineReference::compute(settings)?;
                    &owned
                }
            };
            let mut problem = smooth_euler_1d::<f64>();
            if let Some(t) = settings.t_end {
                problem.t_end = t;
            }
            let (a, b) = problem.domain[0];
            let vars = Variable::for_dimension(1);
            let results = jobs
                .par_iter()
                .map(|&(l, k)| {
                    let mesh = problem.mesh([settings.sizes[k]], pert)?;
                    let opts = SolverOptions {
                        limiter: kinds[l],
                        ..settings.template
                    };
                    let (solver, field) = run_to_end(&problem, mesh, opts, settings.cfl)?;
                    let exact = reference.sample(solver.mesh().axis(0).centers(), b - a)?;
                    vars.iter().map(|&v| field_l1_error(&solver, &field, &exact, v)).collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            let h = settings.sizes.iter().map(|&n| (b - a) / n as f64).collect();
            (vars, h, results)
        }
        RateProblem::Vortex2d => {
            let mut problem = isentropic_vortex_2d::<f64>();
            if let Some(t) = settings.t_end {
                problem.t_end = t;
            }
            let (a, b) = problem.domain[0];
            let vars = Variable::for_dimension(2);
            let results = jobs
                .par_iter()
                .map(|&(l, k)| {
                    let n = settings.sizes[k];
                    let mesh = problem.mesh([n, n], pert)?;
                    let opts = SolverOptions {
                        limiter: kinds[l],
                        ..settings.template
                    };
                    let (solver, field) = run_to_end(&problem, mesh, opts, settings.cfl)?;
                    let gas = solver.options().gas;
                    let exact: Vec<_> = (0..solver.mesh().len())
                        .map(|c| vortex_exact(&solver.mesh().center(c), problem.t_end, &gas))
                        .collect();
                    vars.iter().map(|&v| field_l1_error(&solver, &field, &exact, v)).collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            let h = settings.sizes.iter().map(|&n| (b - a) / n as f64).collect();
            (vars, h, results)
        }
    };
    let nsizes = settings.sizes.len();
    let errors = (0..kinds.len())
        .map(|l| (0..variables.len()).map(|v| (0..nsizes).map(|k| results[l * nsizes + k][v]).collect()).collect())
        .collect();
    Ok(RateTable {
        limiters: kinds.iter().map(|k| k.to_string()).collect(),
        variables,
        sizes: settings.sizes.clone(),
        h,
        errors,
        r: settings.r,
        seed: settings.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_error(&[1.0, 2.0], &[1.0, 2.0], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(l1_error(&[1.5], &[1.0], &[2.0]).unwrap(), 1.0);
        let e: f64 = l1_error(&[0.1, 0.2, 0.3], &[0.0; 3], &[1.0, 2.0, 1.0]).unwrap();
        assert!((e - 0.8).abs() < 1e-15);
        assert!(l1_error(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!((convergence_rate::<f64>(1e-2, 0.02, 2.5e-3, 0.01).unwrap() - 2.0).abs() < 1e-12);
        assert!((convergence_rate::<f64>(1e-2, 0.02, 5e-3, 0.01).unwrap() - 1.0).abs() < 1e-12);
        // an error ratio of 2^1.0993 at factor-2 refinement
        let e2 = 1e-2 / 2f64.powf(1.0993);
        assert!((convergence_rate(1e-2, 0.02, e2, 0.01).unwrap() - 1.0993).abs() < 1e-12);
        assert!(convergence_rate(0.0, 0.02, 1e-3, 0.01).is_err());
        assert!(convergence_rate(1e-2, 0.01, 1e-3, 0.01).is_err());
        assert!(convergence_rate(1e-2, -0.01, 1e-3, 0.01).is_err());
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[3.0, 3.0, 3.0]), 0.0);
        assert_eq!(total_variation(&[1.0, 1.0, 0.0, 0.0]), 1.0);
        assert_eq!(total_variation(&[0.0, 1.0, 0.0]), 2.0);
        assert_eq!(tv_series(&[vec![0.0, 1.0, 0.0], vec![1.0; 3]]), vec![2.0, 0.0]);
    }

    #[test]
    fn interpolation_is_exact_on_lines_and_wraps() {
        let xs = [0.5, 1.5, 2.5, 3.5];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let v: Vec<f64> = interpolate_linear(&xs, &ys, &[0.0, 1.0, 3.9], None).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && (v[2] - 6.8).abs() < 1e-14);
        // periodic on [0, 4]: the wrap interval joins x=3.5 and x=4.5
        let p: Vec<f64> = interpolate_linear(&xs, &[0.0, 1.0, 0.0, 1.0], &[0.0, 3.75], Some(4.0)).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn table_rendering() {
        let t = RateTable {
            limiters: vec!["mc:enhanced".into()],
            variables: vec![Variable::Rho, Variable::P],
            sizes: vec![10, 20],
            h: vec![0.2, 0.1],
            errors: vec![vec![vec![4e-2, 1e-2], vec![2e-2, 1e-2]]],
            r: 0.2,
            seed: 7,
        };
        assert!((t.finest_rate(0, Variable::Rho).unwrap() - 2.0).abs() < 1e-12);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "variable,mc:enhanced\nrho,2.0000\np,1.0000\n");
        assert!(t.to_markdown().contains("| rho | 2.0000 |"));
        let mut ladder = Vec::new();
        t.write_ladder_csv(&mut ladder).unwrap();
        assert_eq!(String::from_utf8(ladder).unwrap().lines().count(), 5);
    }
}
