use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn muscl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muscl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let line = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(line.trim()).expect("error line is json")
}

#[test]
fn run_writes_output_tree_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "run", "--problem", "sod", "--nx", "60", "--perturb-r", "0.3", "--seed", "4", "--t-end", "0.2",
        "--output-times", "0.1,0.2", "--out", "o",
    ];
    let first = muscl(&args, tmp.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&first).trim()).unwrap();
    assert_eq!(summary["completed"], true);
    assert_eq!(summary["t"], 0.2);
    let dir = tmp.path().join("o/sod-60-r0.3-s4-van_albada-enhanced");
    for name in ["config.txt", "t0.1.csv", "t0.2.csv", "diagnostics.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let field = fs::read_to_string(dir.join("t0.2.csv")).unwrap();
    assert!(field.starts_with("x,rho,u,p,e\n"));
    assert_eq!(field.lines().count(), 61);
    let diag = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("step,t,dt,tv_rho,min_rho,min_p\n"));

    let again = muscl(&[&args[..args.len() - 1], &["p"]].concat(), tmp.path());
    assert!(again.status.success());
    let other = tmp.path().join("p/sod-60-r0.3-s4-van_albada-enhanced");
    for name in ["t0.1.csv", "t0.2.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(dir.join(name)).unwrap(), fs::read(other.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("vortex.cfg"),
        "# small vortex\nproblem=vortex2d\nnx=12 ny=12\nperturb-r=0.2\nlimiter=mc flavor=conventional\nt-end=0.5\n",
    )
    .unwrap();
    let o = muscl(&["run", "--config", "vortex.cfg", "--flavor", "enhanced", "--run-id", "v"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = fs::read_to_string(tmp.path().join("out/v/config.txt")).unwrap();
    assert!(cfg.contains("flavor=enhanced\n") && cfg.contains("limiter=mc\n"));
    let field = fs::read_to_string(tmp.path().join("out/v/t0.5.csv")).unwrap();
    assert!(field.starts_with("x,y,rho,u,v,p,e\n"));
    assert_eq!(field.lines().count(), 145);
}

#[test]
fn failures_emit_one_json_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muscl(&["run", "--problem", "sod", "--nx", "20", "--perturb-r", "0.6"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "invalid_value");
    assert_eq!(e["key"], "perturb-r");

    let o = muscl(&["run"], tmp.path());
    let e = stderr_json(&o);
    assert_eq!(e["error"], "missing_keys");
    assert!(e["message"].as_str().unwrap().contains("problem, nx"));

    fs::write(tmp.path().join("bad.cfg"), "problem=sod nx=20 limter=mc\n").unwrap();
    let e = stderr_json(&muscl(&["run", "--config", "bad.cfg"], tmp.path()));
    assert_eq!(e["error"], "unknown_key");

    let o = muscl(&["frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "usage");
}

#[test]
fn grid_gen_faces() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muscl(&["grid-gen", "--nx", "100", "--perturb-r", "0.3", "--seed", "1"], tmp.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let faces: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("face"));
    assert_eq!(faces.len(), 101);
    assert_eq!((faces[0], faces[100]), (0.0, 1.0));
    assert!(faces.windows(2).all(|w| w[1] > w[0]));
    let again = muscl(&["grid-gen", "--nx", "100", "--perturb-r", "0.3", "--seed", "1"], tmp.path());
    assert_eq!(stdout(&again), text);

    let o = muscl(&["grid-gen", "--nx", "8", "--ny", "4", "--perturb-r", "0.2", "--out", "g"], tmp.path());
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(tmp.path().join("g/y.csv")).unwrap().lines().count(), 6);
}

#[test]
fn rate_study_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muscl(
        &[
            "rate-study", "--problem", "smooth1d", "--limiters", "mc:enhanced,van_albada:conventional", "--sizes",
            "20,40", "--perturb-r", "0.2", "--seed", "7", "--reference-cells", "640", "--t-end", "0.05",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("variable,mc:enhanced,van_albada:conventional\nrho,"));
    assert_eq!(csv.lines().count(), 4);
    let dir = tmp.path().join("out/rates-smooth1d-r0.2-s7");
    assert_eq!(fs::read_to_string(dir.join("rates.csv")).unwrap(), csv);
    assert!(dir.join("ladder.csv").exists() && dir.join("rates.md").exists());
}

#[test]
fn limiter_table_and_advect_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muscl(&["limiter-table", "--limiter", "minmod", "--a", "1.5", "--b", "1.2", "--samples", "7"], tmp.path());
    assert!(o.status.success());
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    // theta = 1.5 = A gives phi = B
    assert!((rows[3][0] - 1.5).abs() < 1e-15 && (rows[3][1] - 1.2).abs() < 1e-14);

    let o = muscl(&["advect-oracle", "--profile", "square", "--steps", "20", "--velocity", "-0.7"], tmp.path());
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] <= v[1] + 1e-12, "TV grew: {line}");
        assert!(v[3] >= 0.0 && v[4] <= 1.0 && v[5] >= 0.0 && v[6] <= 1.0);
        assert!(v[7] <= 1e-13);
    }
}
