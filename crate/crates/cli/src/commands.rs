//! Subcommands: argument definitions and their implementations.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use muscl_core::advection::{
    conservative_update, flux_limited_fluxes, linear_cell_averages, rep_advance, AdvectionBoundary, RepState,
};
use muscl_core::analysis::{rate_study, RateProblem, StudySettings};
use muscl_core::euler::EntropyFix;
use muscl_core::limiters::{sweby_table, Flavor, LimiterFamily, LimiterKind};
use muscl_core::mesh::{axis_grids, Grid1D, PerturbationParams};
use muscl_core::problems::{AnyProblem, Problem};
use muscl_core::solver::{write_diagnostics_csv, Solver, SolverOptions, TimeControls};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::{parse_limit_vars, Assignments, RunConfig};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "muscl", version, about = "MUSCL solver with grid-aware slope limiters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one problem and write field dumps and diagnostics.
    Run(RunArgs),
    /// Convergence rates of several limiters on a mesh ladder.
    RateStudy(RateStudyArgs),
    /// Scalar advection with the exact REP update, one CSV row per step.
    AdvectOracle(AdvectArgs),
    /// Sample a limiter and its admissible region.
    LimiterTable(LimiterTableArgs),
    /// Generate (perturbed) cell faces.
    GridGen(GridGenArgs),
}

/// Flags mirror the config keys and override the config file.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file with key=value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub nx: Option<String>,
    #[arg(long)]
    pub ny: Option<String>,
    #[arg(long = "perturb-r")]
    pub perturb_r: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub limiter: Option<String>,
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub cfl: Option<String>,
    #[arg(long = "t-end")]
    pub t_end: Option<String>,
    #[arg(long = "output-times")]
    pub output_times: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long = "run-id")]
    pub run_id: Option<String>,
    #[arg(long = "entropy-fix")]
    pub entropy_fix: Option<String>,
    #[arg(long = "limit-vars")]
    pub limit_vars: Option<String>,
    #[arg(long = "positivity-fallback")]
    pub positivity_fallback: Option<String>,
    #[arg(long = "dmr-front")]
    pub dmr_front: Option<String>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<String>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let mut a = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
                    path: path.display().to_string(),
                    source,
                })?;
                Assignments::parse(&text)?
            }
            None => Assignments::default(),
        };
        let flags = [
            ("problem", &self.problem),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("perturb-r", &self.perturb_r),
            ("seed", &self.seed),
            ("limiter", &self.limiter),
            ("flavor", &self.flavor),
            ("cfl", &self.cfl),
            ("t-end", &self.t_end),
            ("output-times", &self.output_times),
            ("out", &self.out),
            ("run-id", &self.run_id),
            ("entropy-fix", &self.entropy_fix),
            ("limit-vars", &self.limit_vars),
            ("positivity-fallback", &self.positivity_fallback),
            ("dmr-front", &self.dmr_front),
            ("max-steps", &self.max_steps),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                a.set(key, v.clone())?;
            }
        }
        RunConfig::from_assignments(&a)
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub run_dir: String,
    pub problem: String,
    pub limiter: String,
    pub steps: usize,
    pub t: f64,
    pub completed: bool,
    pub fallbacks: usize,
    pub min_rho: f64,
    pub min_p: f64,
    pub files: Vec<String>,
}

fn time_tag(t: f64) -> String {
    format!("t{t}.csv")
}

/// Runs the configured problem, writing `<out>/<run-id>/{config.txt, t*.csv, diagnostics.csv}`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let dir = cfg.out.join(cfg.run_id());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), cfg.render())?;
    match cfg.problem.build::<f64>(cfg.dmr_front) {
        AnyProblem::OneD(p) => run_problem(p, cfg, &dir),
        AnyProblem::TwoD(p) => run_problem(p, cfg, &dir),
    }
}

fn run_problem<const D: usize>(problem: Problem<f64, D>, cfg: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let cells: [usize; D] = cfg
        .cells
        .clone()
        .try_into()
        .map_err(|_| CliError::invalid("nx", format!("problem `{}` needs {D} cell counts", problem.name)))?;
    let pert = (cfg.perturb_r > 0.0)
        .then(|| PerturbationParams::new(cfg.perturb_r, cfg.seed))
        .transpose()?;
    let mesh = problem.mesh(cells, pert)?;
    let mask = problem.mask(&mesh);
    let options = SolverOptions {
        limiter: cfg.limiter_kind(),
        limit_vars: cfg.limit_vars,
        entropy_fix: if cfg.entropy_fix { EntropyFix::default() } else { EntropyFix::Off },
        gas: problem.gas,
        positivity_fallback: cfg.positivity_fallback,
    };
    let solver = Solver::new(mesh, &problem.boundaries, mask, options)?;
    let t_end = cfg.t_end.unwrap_or(problem.t_end);
    let mut controls = TimeControls::new(cfg.cfl, t_end)?;
    if let Some(m) = cfg.max_steps {
        controls = controls.with_max_steps(m);
    }
    let outputs = if cfg.output_times.is_empty() { vec![t_end] } else { cfg.output_times.clone() };
    let field = solver.initial_field(|x| (problem.ic)(x));
    let mut files = vec!["config.txt".to_string()];
    let result = solver.run(field, &controls, &outputs, |t, f| {
        let name = time_tag(t);
        solver.write_field_csv(f, io::BufWriter::new(fs::File::create(dir.join(&name))?))?;
        files.push(name);
        Ok(())
    })?;
    write_diagnostics_csv(&result.history, io::BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?))?;
    files.push("diagnostics.csv".to_string());
    let h = &result.history;
    Ok(RunSummary {
        run_dir: dir.display().to_string(),
        problem: problem.name.to_string(),
        limiter: cfg.limiter_kind().to_string(),
        steps: result.steps,
        t: result.t,
        completed: result.t >= t_end,
        fallbacks: h.iter().map(|r| r.fallbacks).sum(),
        min_rho: h.iter().map(|r| r.min_rho).fold(f64::INFINITY, f64::min),
        min_p: h.iter().map(|r| r.min_p).fold(f64::INFINITY, f64::min),
        files,
    })
}

#[derive(Debug, Args)]
pub struct RateStudyArgs {
    /// smooth1d or vortex2d.
    #[arg(long)]
    pub problem: String,
    /// Comma-separated `family[:flavor]` list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub limiters: Vec<String>,
    /// Comma-separated cell counts per axis, coarse to fine.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long = "perturb-r", default_value_t = 0.0)]
    pub perturb_r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.6)]
    pub cfl: f64,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Cells of the fine-grid reference (smooth1d).
    #[arg(long = "reference-cells", default_value_t = 25_600)]
    pub reference_cells: usize,
    #[arg(long = "limit-vars", default_value = "conservative")]
    pub limit_vars: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "run-id")]
    pub run_id: Option<String>,
}

/// Writes `rates.csv`, `ladder.csv` and `rates.md` and returns the rates CSV text.
pub fn rate_study_cmd(args: &RateStudyArgs) -> Result<String, CliError> {
    let problem: RateProblem = args.problem.parse()?;
    if !(0.0..0.5).contains(&args.perturb_r) {
        return Err(CliError::invalid("perturb-r", format!("must satisfy 0 <= r < 0.5, got {}", args.perturb_r)));
    }
    if !(args.cfl > 0.0 && args.cfl <= 1.0) {
        return Err(CliError::invalid("cfl", format!("must lie in (0, 1], got {}", args.cfl)));
    }
    if args.sizes.iter().any(|&n| n < 3) {
        return Err(CliError::invalid("sizes", "at least 3 cells per axis are needed"));
    }
    let kinds = args
        .limiters
        .iter()
        .map(|s| s.parse::<LimiterKind>().map_err(|e| CliError::invalid("limiters", e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut settings = StudySettings::new(problem, args.sizes.clone(), args.perturb_r, args.seed);
    settings.cfl = args.cfl;
    settings.t_end = args.t_end;
    settings.reference_cells = args.reference_cells;
    settings.template.limit_vars = parse_limit_vars(&args.limit_vars).map_err(|m| CliError::invalid("limit-vars", m))?;

    let table = rate_study(&settings, &kinds, None)?;
    let run_id = args
        .run_id
        .clone()
        .unwrap_or_else(|| format!("rates-{}-r{}-s{}", args.problem, args.perturb_r, args.seed));
    let dir = args.out.join(run_id);
    fs::create_dir_all(&dir)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    fs::write(dir.join("rates.csv"), &csv)?;
    table.write_ladder_csv(io::BufWriter::new(fs::File::create(dir.join("ladder.csv"))?))?;
    fs::write(dir.join("rates.md"), table.to_markdown())?;
    let sizes = args.sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let t_end = args.t_end.map(|t| format!("t-end={t}\n")).unwrap_or_default();
    fs::write(
        dir.join("config.txt"),
        format!(
            "problem={}\nlimiters={}\nsizes={sizes}\nperturb-r={}\nseed={}\ncfl={}\n{t_end}reference-cells={}\nlimit-vars={}\n",
            args.problem,
            args.limiters.join(","),
            args.perturb_r,
            args.seed,
            args.cfl,
            args.reference_cells,
            args.limit_vars
        ),
    )?;
    Ok(String::from_utf8(csv).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Sine,
    Square,
    Linear,
    Random,
}

#[derive(Debug, Args)]
pub struct AdvectArgs {
    #[arg(long, default_value_t = 100)]
    pub cells: usize,
    #[arg(long = "perturb-r", default_value_t = 0.3)]
    pub perturb_r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `family[:flavor]`.
    #[arg(long, default_value = "van_albada")]
    pub limiter: String,
    /// Largest cell Courant number.
    #[arg(long, default_value_t = 0.8)]
    pub courant: f64,
    /// Advection speed; its sign picks the upwind side.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub velocity: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Profile::Sine)]
    pub profile: Profile,
    /// Also write the final `x,u` cell averages here.
    #[arg(long)]
    pub field: Option<PathBuf>,
}

/// Per-step CSV: `step,tv_before,tv_after,c_min,c_max,d_min,d_max,flux_form_defect`.
pub fn advect_oracle(args: &AdvectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let kind: LimiterKind = args.limiter.parse()?;
    let pert = (args.perturb_r > 0.0)
        .then(|| PerturbationParams::new(args.perturb_r, args.seed))
        .transpose()?;
    let grid = match pert {
        Some(p) => Grid1D::perturbed(0.0, 1.0, args.cells, p)?,
        None => Grid1D::uniform(0.0, 1.0, args.cells)?,
    };
    let centers = grid.centers().to_vec();
    let (u, boundary) = match args.profile {
        Profile::Sine => (
            centers.iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect(),
            AdvectionBoundary::Periodic,
        ),
        Profile::Square => (
            centers.iter().map(|&x| if (0.25..0.75).contains(&x) { 1.0 } else { 0.0 }).collect(),
            AdvectionBoundary::Periodic,
        ),
        Profile::Linear => (linear_cell_averages(&grid, 2.0, -1.0), AdvectionBoundary::LinearExtrapolation),
        Profile::Random => {
            let mut rng = StdRng::seed_from_u64(args.seed);
            (
                (0..args.cells).map(|_| rng.random::<f64>()).collect(),
                AdvectionBoundary::Periodic,
            )
        }
    };
    let start = RepState::with_courant(grid, u, args.velocity, args.courant)?;
    let mut state = RepState::with_boundary(start.grid().clone(), start.u().to_vec(), args.velocity, start.dt(), boundary)?;
    let mut w = io::BufWriter::new(out);
    writeln!(w, "step,tv_before,tv_after,c_min,c_max,d_min,d_max,flux_form_defect")?;
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    for step in 1..=args.steps {
        let (next, diag) = rep_advance(&state, &kind)?;
        let flux_form = conservative_update(&state, &flux_limited_fluxes(&state, &diag));
        let defect = next.iter().zip(&flux_form).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (c_lo, c_hi) = range(&diag.c);
        let (d_lo, d_hi) = range(&diag.d);
        writeln!(
            w,
            "{step},{},{},{c_lo},{c_hi},{d_lo},{d_hi},{defect:e}",
            diag.tv_before, diag.tv_after
        )?;
        state = state.with_values(next)?;
    }
    w.flush()?;
    if let Some(path) = &args.field {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "x,u")?;
        for (x, u) in state.grid().centers().iter().zip(state.u()) {
            writeln!(f, "{x},{u}")?;
        }
        f.flush()?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct LimiterTableArgs {
    /// `family[:flavor]`.
    #[arg(long)]
    pub limiter: String,
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long = "theta-max", default_value_t = 3.0)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 61)]
    pub samples: usize,
}

/// CSV `theta,phi,lower,upper` on `samples` points of `[0, theta_max]`.
pub fn limiter_table(args: &LimiterTableArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut kind: LimiterKind = args.limiter.parse()?;
    if let Some(f) = &args.flavor {
        let flavor: Flavor = f.parse()?;
        if args.limiter.contains(':') && flavor != kind.flavor {
            return Err(CliError::invalid("flavor", format!("`{flavor}` contradicts `{}`", args.limiter)));
        }
        kind.flavor = flavor;
    }
    if kind.family == LimiterFamily::None && kind.flavor == Flavor::Enhanced {
        kind.flavor = Flavor::Conventional;
    }
    if args.samples < 2 || !(args.theta_max > 0.0) {
        return Err(CliError::Usage("need at least 2 samples and theta-max > 0".into()));
    }
    let step = args.theta_max / (args.samples - 1) as f64;
    let rows = sweby_table(kind, args.a, args.b, (0..args.samples).map(|i| i as f64 * step))?;
    let mut w = io::BufWriter::new(out);
    writeln!(w, "theta,phi,lower,upper")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.theta, r.phi, r.lower, r.upper)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct GridGenArgs {
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub y1: f64,
    #[arg(long = "perturb-r", default_value_t = 0.0)]
    pub perturb_r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1D: output file (default stdout). 2D: directory receiving `x.csv` and `y.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn grid_gen(args: &GridGenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pert = (args.perturb_r > 0.0)
        .then(|| PerturbationParams::new(args.perturb_r, args.seed))
        .transpose()?;
    match args.ny {
        None => {
            let g = &axis_grids(&[(args.x0, args.x1)], &[args.nx], pert)?[0];
            match &args.out {
                Some(path) => g.write_csv(io::BufWriter::new(fs::File::create(path)?))?,
                None => g.write_csv(stdout)?,
            }
        }
        Some(ny) => {
            let dir = args
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("2D grids need --out <dir>".into()))?;
            fs::create_dir_all(dir)?;
            let grids = axis_grids(&[(args.x0, args.x1), (args.y0, args.y1)], &[args.nx, ny], pert)?;
            for (name, g) in ["x.csv", "y.csv"].iter().zip(&grids) {
                g.write_csv(io::BufWriter::new(fs::File::create(dir.join(name))?))?;
            }
        }
    }
    Ok(())
}

/// Dispatches a parsed command line, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let cfg = args.to_config()?;
            let summary = run(&cfg)?;
            writeln!(stdout, "{}", serde_json::to_string(&summary).expect("summary serializes"))?;
        }
        Command::RateStudy(args) => {
            let csv = rate_study_cmd(args)?;
            stdout.write_all(csv.as_bytes())?;
        }
        Command::AdvectOracle(args) => advect_oracle(args, stdout)?,
        Command::LimiterTable(args) => limiter_table(args, stdout)?,
        Command::GridGen(args) => grid_gen(args, stdout)?,
    }
    Ok(())
}
