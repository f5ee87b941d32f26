//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Set `MUSCL_FULL=1` to run the
//! full 20..160 vortex ladder instead of the reduced 20..80 variant.

use std::process::ExitCode;
use std::time::Instant;

use muscl_core::advection::{
    conservative_update, flux_limited_fluxes, limited_slopes, linear_cell_averages, rep_fluxes, rep_step,
    symmetry_pair_check, AdvectionBoundary, RepState,
};
use muscl_core::analysis::{rate_study, FineReference, RateProblem, RateTable, StudySettings, Variable};
use muscl_core::limiters::{
    alt_monitor_feasible, conventional_limiter, enhanced_limiter, is_admissible, LimiterFamily, LimiterKind,
    LimiterParams,
};
use muscl_core::mesh::{Grid1D, PerturbationParams};
use muscl_core::problems::{
    blast_wave, double_mach_reflection, double_shock, sod_shock_tube, wind_tunnel_step, DmrFront, Problem,
};
use muscl_core::solver::{RunResult, Solver, SolverError, SolverOptions, TimeControls};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = fn(&mut Vec<String>) -> Outcome;

const ENHANCED: [LimiterFamily; 7] = LimiterFamily::ENHANCEABLE;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_admissible(rng: &mut StdRng) -> (f64, f64) {
    let a = rng.random_range(-3.0f64..3.0).exp();
    let b = rng.random_range(0.001..0.999) * 2.0f64.min(2.0 * a);
    (a, b)
}

fn random_grid(rng: &mut StdRng, n: std::ops::Range<usize>) -> Grid1D<f64> {
    let n = rng.random_range(n);
    let r = rng.random_range(0.0..0.45);
    Grid1D::perturbed(0.0, 1.0, n, PerturbationParams::new(r, rng.random()).unwrap()).unwrap()
}

/// Mix of smooth data, plateaus and jumps.
fn random_data(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(-2.0..2.0),
        })
        .collect()
}

fn order_condition() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (a, b) = random_admissible(&mut rng);
        for fam in ENHANCED {
            let p = LimiterParams::new(fam, a, b).map_err(|e| e.to_string())?;
            worst = worst.max((enhanced_limiter(fam, &p, a) - b).abs());
        }
    }
    check(worst <= 1e-13, format!("max |phi(A) - B| = {worst:.2e} over 10^4 (A, B) x 7 families"))
}

fn tvd_box() -> Outcome {
    let thetas: Vec<f64> = (0..=240).map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0)).collect();
    let mut violations = 0usize;
    let mut samples = 0usize;
    let mut inspect = |phi: f64, t: f64| {
        samples += 1;
        if !(0.0..=2.0).contains(&phi) || phi / t > 2.0 * (1.0 + 1e-15) {
            violations += 1;
        }
    };
    for i in 0..=40 {
        let a = (-3.0 + 6.0 * i as f64 / 40.0).exp();
        for j in 1..=24 {
            let b = j as f64 / 25.0 * 2.0f64.min(2.0 * a);
            for fam in ENHANCED {
                let p = LimiterParams::new(fam, a, b).map_err(|e| e.to_string())?;
                for &t in &thetas {
                    inspect(enhanced_limiter(fam, &p, t), t);
                }
            }
        }
    }
    for fam in LimiterFamily::ALL {
        for &t in &thetas {
            inspect(conventional_limiter(fam, t), t);
        }
    }
    check(violations == 0, format!("{violations} violations in {samples} samples"))
}

fn scalar_tvd() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let (mut worst_tv, mut worst_coeff) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let grid = random_grid(&mut rng, 8..60);
        let u = random_data(&mut rng, grid.len());
        let lambda = rng.random_range(0.0..=1.0);
        let c = if rng.random() { 1.0 } else { -1.0 };
        let st = RepState::with_courant(grid, u, c, lambda).map_err(|e| e.to_string())?;
        for fam in ENHANCED {
            let slopes = limited_slopes(&st, &LimiterKind::enhanced(fam)).map_err(|e| e.to_string())?;
            let (_, diag) = rep_step(&st, &slopes).map_err(|e| e.to_string())?;
            worst_tv = worst_tv.max(diag.tv_after - diag.tv_before);
            let coeffs = if c > 0.0 { &diag.c } else { &diag.d };
            for &k in coeffs {
                worst_coeff = worst_coeff.max(-k).max(k - 1.0);
            }
        }
    }
    check(
        worst_tv <= 1e-12 && worst_coeff <= 1e-15,
        format!("max TV change {worst_tv:.2e}, max coefficient excursion outside [0,1] {worst_coeff:.2e}"),
    )
}

fn symmetry() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for fam in ENHANCED {
        for _ in 0..200 {
            let grid = random_grid(&mut rng, 8..60);
            let u = random_data(&mut rng, grid.len());
            let lambda = rng.random_range(0.0..=1.0);
            let st = RepState::with_courant(grid, u, 1.0, lambda).map_err(|e| e.to_string())?;
            worst = worst.max(symmetry_pair_check(&st, &LimiterKind::enhanced(fam)).map_err(|e| e.to_string())?);
        }
    }
    check(worst <= 1e-12, format!("max mirrored defect {worst:.2e} over 200 trials x 7 families"))
}

fn slope_defect(grid: Grid1D<f64>, slope: f64, kind: LimiterKind) -> Result<f64, String> {
    let u = linear_cell_averages(&grid, 0.3, slope);
    let st = RepState::with_boundary(grid, u, 1.0, 0.0, AdvectionBoundary::LinearExtrapolation).map_err(|e| e.to_string())?;
    let s = limited_slopes(&st, &kind).map_err(|e| e.to_string())?;
    Ok(s.sigma().iter().map(|&x| (x - slope).abs()).fold(0.0, f64::max))
}

fn linearity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let grid = random_grid(&mut rng, 4..40);
        let slope = rng.random_range(-3.0..3.0);
        for fam in ENHANCED {
            worst = worst.max(slope_defect(grid.clone(), slope, LimiterKind::enhanced(fam))?);
        }
    }
    let g121 = Grid1D::from_faces(vec![0.0, 1.0, 3.0, 4.0]).map_err(|e| e.to_string())?;
    let conventional = ENHANCED
        .iter()
        .map(|&fam| slope_defect(g121.clone(), 1.0, LimiterKind::conventional(fam)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check(
        worst <= 1e-12 && conventional >= 1e-3,
        format!("enhanced max slope defect {worst:.2e}; conventional defect on sizes (1,2,1) {conventional:.3}"),
    )
}

fn rate_line(table: &RateTable, name: &str, var: Variable) -> Result<f64, String> {
    let l = table.limiter_index(name).ok_or_else(|| format!("{name} missing from table"))?;
    table.finest_rate(l, var).ok_or_else(|| format!("{name}: no finest rate"))
}

fn smooth_convergence(extra: &mut Vec<String>) -> Outcome {
    let settings = StudySettings::new(RateProblem::Smooth1d, vec![100, 200, 400, 800, 1600], 0.2, 0);
    let reference = FineReference::compute(&settings).map_err(|e| e.to_string())?;
    let fam = |f| LimiterKind::enhanced(f);
    let kinds = [
        fam(LimiterFamily::Mc),
        fam(LimiterFamily::VanLeer),
        fam(LimiterFamily::VanAlbada),
        fam(LimiterFamily::Berger1),
        fam(LimiterFamily::Berger2),
        fam(LimiterFamily::Minmod),
        fam(LimiterFamily::Superbee),
        LimiterKind::conventional(LimiterFamily::VanAlbada),
        LimiterKind::conventional(LimiterFamily::Mc),
    ];
    let table = rate_study(&settings, &kinds, Some(&reference)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lo, hi) in [
        ("mc:enhanced", 1.8, f64::INFINITY),
        ("van_leer:enhanced", 1.8, f64::INFINITY),
        ("van_albada:enhanced", 1.8, f64::INFINITY),
        ("berger1:enhanced", 1.8, f64::INFINITY),
        ("berger2:enhanced", 1.8, f64::INFINITY),
        ("van_albada:conventional", f64::NEG_INFINITY, 1.35),
        ("minmod:enhanced", 1.3, 1.95),
        ("superbee:enhanced", 1.3, 1.95),
    ] {
        let rate = rate_line(&table, name, Variable::P)?;
        ok &= rate >= lo && rate <= hi;
        parts.push(format!("{name} {rate:.3}"));
    }

    // worked examples with known expected rates
    let mc = rate_line(&table, "mc:enhanced", Variable::P)?;
    let va = rate_line(&table, "van_albada:conventional", Variable::P)?;
    let uniform = StudySettings { r: 0.0, ..settings.clone() };
    let u_table = rate_study(&uniform, &[LimiterKind::conventional(LimiterFamily::Mc)], Some(&reference))
        .map_err(|e| e.to_string())?;
    let mc_uniform = rate_line(&u_table, "mc:conventional", Variable::P)?;
    for (label, got, want, tol) in [
        ("conventional MC, r = 0", mc_uniform, 2.0067, 0.25),
        ("enhanced MC, r = 0.2", mc, 2.0566, 0.25),
        ("conventional van Albada, r = 0.2", va, 1.1124, 0.2),
    ] {
        let pass = (got - want).abs() <= tol;
        ok &= pass;
        extra.push(format!(
            "  example {}: {label}: rate {got:.4}, expected {want} +/- {tol}",
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    check(ok, format!("finest-pair p rates: {}", parts.join(", ")))
}

fn vortex_convergence(extra: &mut Vec<String>) -> Outcome {
    let full = std::env::var("MUSCL_FULL").is_ok_and(|v| v != "0");
    let sizes = if full { vec![20, 40, 80, 160] } else { vec![20, 40, 80] };
    let settings = StudySettings::new(RateProblem::Vortex2d, sizes, 0.2, 0);
    let kinds = [
        LimiterKind::enhanced(LimiterFamily::VanAlbada),
        LimiterKind::enhanced(LimiterFamily::Mc),
        LimiterKind::conventional(LimiterFamily::VanAlbada),
        LimiterKind::conventional(LimiterFamily::Mc),
    ];
    let table = rate_study(&settings, &kinds, None).map_err(|e| e.to_string())?;
    let va = rate_line(&table, "van_albada:enhanced", Variable::P)?;
    let mc = rate_line(&table, "mc:enhanced", Variable::P)?;
    let cva = rate_line(&table, "van_albada:conventional", Variable::P)?;
    let cmc = rate_line(&table, "mc:conventional", Variable::P)?;
    let conventional = format!("conventional van Albada {cva:.3}, MC {cmc:.3}");
    if full {
        check(
            va >= 1.8 && mc >= 1.7 && cva <= 1.4 && cmc <= 1.4,
            format!("full ladder 20..160: enhanced van Albada {va:.3}, MC {mc:.3}; {conventional}"),
        )
    } else {
        extra.push(format!("  info: reduced ladder {conventional} (bound applies to the full ladder)"));
        check(
            va >= 1.5 && mc >= 1.5,
            format!("reduced ladder 20..80: enhanced van Albada {va:.3}, MC {mc:.3} (MUSCL_FULL=1 for 20..160)"),
        )
    }
}

fn va_options() -> SolverOptions<f64> {
    SolverOptions::new(LimiterKind::enhanced(LimiterFamily::VanAlbada))
}

fn solve<const D: usize>(
    problem: &Problem<f64, D>,
    cells: [usize; D],
    r: f64,
) -> Result<(Solver<f64, D>, f64, RunResult<f64, D>), SolverError> {
    let mesh = problem.mesh(cells, Some(PerturbationParams::new(r, 0)?))?;
    let mask = problem.mask(&mesh);
    let solver = Solver::new(mesh, &problem.boundaries, mask, va_options())?;
    let field = solver.initial_field(|x| (problem.ic)(x));
    let tv0 = solver.step_record(&field, 0, 0.0, 0.0).tv_rho;
    let out = solver.run(field, &TimeControls::new(0.6, problem.t_end)?, &[], |_, _| Ok(()))?;
    Ok((solver, tv0, out))
}

fn physical<const D: usize>(out: &RunResult<f64, D>) -> bool {
    out.history.iter().all(|r| r.min_rho > 0.0 && r.min_p > 0.0)
}

fn fallbacks<const D: usize>(out: &RunResult<f64, D>) -> usize {
    out.history.iter().map(|r| r.fallbacks).sum()
}

fn shock_robustness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let (_, tv0, sod) = solve(&sod_shock_tube(), [200], 0.3).map_err(|e| format!("sod: {e}"))?;
    let growth = sod.history.iter().map(|r| r.tv_rho).fold(tv0, f64::max) / tv0 - 1.0;
    ok &= physical(&sod) && sod.t == 0.8 && growth <= 0.05;
    parts.push(format!("sod t={} TV growth {:.2}% fallbacks {}", sod.t, 100.0 * growth, fallbacks(&sod)));
    for (name, problem, cells) in [("double shock", double_shock(), 150), ("blast", blast_wave(), 200)] {
        let (_, _, out) = solve(&problem, [cells], 0.3).map_err(|e| format!("{name}: {e}"))?;
        ok &= physical(&out) && out.t == problem.t_end;
        parts.push(format!("{name} t={} fallbacks {}", out.t, fallbacks(&out)));
    }
    check(ok, parts.join("; "))
}

fn benchmarks_2d() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let step = wind_tunnel_step();
    let (_, _, out) = solve(&step, [150, 50], 0.3).map_err(|e| format!("step: {e}"))?;
    ok &= physical(&out) && out.t == step.t_end;
    parts.push(format!("step t={} steps {} fallbacks {}", out.t, out.steps, fallbacks(&out)));

    let dmr = double_mach_reflection();
    let (solver, _, out) = solve(&dmr, [480, 120], 0.3).map_err(|e| format!("dmr: {e}"))?;
    ok &= physical(&out) && out.t == dmr.t_end;
    // shock crossing on the top row: first cell from the right whose density exceeds
    // the mean of the pre- and post-shock densities
    let mesh = solver.mesh();
    let [nx, ny] = mesh.dims();
    let threshold = 0.5 * (8.0 + 1.4);
    let xs = mesh.axis(0).centers();
    let rho = |i: usize| out.field.values()[mesh.linear(&[i, ny - 1])].rho;
    let crossing = (1..nx).rev().find(|&i| rho(i - 1) >= threshold && rho(i) < threshold).map(|i| {
        let (r0, r1) = (rho(i - 1), rho(i));
        xs[i - 1] + (threshold - r0) / (r1 - r0) * (xs[i] - xs[i - 1])
    });
    let front = DmrFront::Consistent.position(dmr.t_end);
    let h = mesh.axis(0).reference_size();
    match crossing {
        Some(x) => {
            let cells = (x - front).abs() / h;
            ok &= cells <= 2.0;
            parts.push(format!(
                "dmr t={} steps {} fallbacks {}, top-row front at x={x:.4} vs {front:.4} ({cells:.2} cells)",
                out.t,
                out.steps,
                fallbacks(&out)
            ));
        }
        None => {
            ok = false;
            parts.push("dmr: no shock crossing found on the top row".to_string());
        }
    }
    check(ok, parts.join("; "))
}

fn alt_monitor_witness() -> Outcome {
    let feasible = alt_monitor_feasible(1.0, 1.2);
    let admissible = is_admissible(1.0, 1.2);
    check(
        !feasible && admissible,
        format!("alt_monitor_feasible(1, 1.2) = {feasible}, admissible = {admissible}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let grid = random_grid(&mut rng, 8..60);
        let u = random_data(&mut rng, grid.len());
        let lambda = rng.random_range(0.0..=1.0);
        let c = if rng.random() { 0.8 } else { -1.3 };
        let fam = ENHANCED[rng.random_range(0..ENHANCED.len())];
        let st = RepState::with_courant(grid, u, c, lambda).map_err(|e| e.to_string())?;
        let slopes = limited_slopes(&st, &LimiterKind::enhanced(fam)).map_err(|e| e.to_string())?;
        let (next, diag) = rep_step(&st, &slopes).map_err(|e| e.to_string())?;
        let a = conservative_update(&st, &rep_fluxes(&st, &slopes));
        let b = conservative_update(&st, &flux_limited_fluxes(&st, &diag));
        for i in 0..next.len() {
            worst = worst.max((next[i] - a[i]).abs()).max((next[i] - b[i]).abs());
        }
    }
    check(worst <= 1e-13, format!("max |REP - flux form| = {worst:.2e} over 500 cases"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("order condition", |_| order_condition()),
        ("TVD box", |_| tvd_box()),
        ("scalar REP TVD", |_| scalar_tvd()),
        ("symmetry preservation", |_| symmetry()),
        ("linearity preservation", |_| linearity()),
        ("1D smooth Euler convergence", smooth_convergence),
        ("2D vortex convergence", vortex_convergence),
        ("shock robustness", |_| shock_robustness()),
        ("2D benchmark completion", |_| benchmarks_2d()),
        ("alternative monitor witness", |_| alt_monitor_witness()),
        ("oracle equivalence", |_| oracle_equivalence()),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut extra = Vec::new();
        let outcome = run(&mut extra);
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {name}: {detail} [{secs:.1} s]", k + 1);
        for line in extra {
            println!("{line}");
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
