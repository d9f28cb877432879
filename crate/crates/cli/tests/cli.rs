use std::path::Path;
use std::process::{Command, Output};

fn rcm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcm"))
        .current_dir(dir)
        .env_remove("RCM_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn build_writes_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let out = rcm(d.path(), &["build", "--r", "3", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read(d.path(), "o/complex.json");
    assert!(json.contains("\"config_hash\"") && json.contains("\"master_seed\": 1"));
    assert!(read(d.path(), "o/points.csv").starts_with("m,l,x0,x1,mark\n"));
    assert!(read(d.path(), "o/components.csv").starts_with("component_size,count\n"));
}

#[test]
fn zero_intensity_build_has_only_origin() {
    let d = tempfile::tempdir().unwrap();
    let out = rcm(d.path(), &["build", "--beta", "0", "--r", "3", "--out", "o"]);
    assert!(out.status.success());
    assert_eq!(read(d.path(), "o/points.csv").lines().count(), 2);
    assert_eq!(read(d.path(), "o/components.csv"), "component_size,count\n1,1\n");
}

#[test]
fn single_cell_sweep_csv() {
    let d = tempfile::tempdir().unwrap();
    let out = rcm(d.path(), &["sweep", "--beta", "3", "--r", "2", "--n", "20", "--out", "o"]);
    assert!(out.status.success());
    let csv = read(d.path(), "o/sweep.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "beta,r,q,n,theta_hat,ci_lo,ci_hi");
    assert!(lines[1].starts_with("3,2,0,20,"));
}

#[test]
fn invalid_configurations_exit_with_2() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["build", "--q", "2"][..],
        &["build", "--r", "2", "--s", "3"],
        &["sweep", "--n", "0"],
        &["build", "--family", "kind = \"nope\""],
        &["build", "--config", "missing.toml"],
        &["frobnicate"],
    ] {
        let out = rcm(d.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn no_crossing_exits_with_3() {
    let d = tempfile::tempdir().unwrap();
    let family = r#"kind = "diam_kernel", kernels = [{ shape = "constant", value = 0.0 }], alpha = 1, cutoff = 0.8"#;
    let out = rcm(d.path(), &["betac", "--family", family, "--n", "5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("crossing"));
}

#[test]
fn seed_precedence() {
    let d = tempfile::tempdir().unwrap();
    let config = "master_seed = 5\ndim = 2\nq = 0\nn = 4\nbetas = [3.0]\nradii = [2.0]\nout = \"o\"\n\n\
                  [family]\nkind = \"vietoris_rips\"\nradius = 0.3\nalpha = 1\ncutoff = 0.8\n";
    std::fs::write(d.path().join("run.toml"), config).unwrap();
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcm"));
        cmd.current_dir(d.path()).env_remove("RCM_SEED").args(args);
        if let Some(v) = env {
            cmd.env("RCM_SEED", v);
        }
        assert!(cmd.output().unwrap().status.success());
        let json = read(d.path(), "o/complex.json");
        let line = json.lines().find(|l| l.contains("\"master_seed\"")).unwrap().to_string();
        line.trim().trim_end_matches(',').to_string()
    };
    assert_eq!(seed_of(&["build", "--config", "run.toml"], Some("9")), "\"master_seed\": 5");
    assert_eq!(seed_of(&["build", "--config", "run.toml", "--seed", "7"], None), "\"master_seed\": 7");
    assert_eq!(seed_of(&["build", "--out", "o"], Some("9")), "\"master_seed\": 9");
    assert_eq!(seed_of(&["build", "--out", "o"], None), "\"master_seed\": 1");
}

#[test]
fn render_and_explore() {
    let d = tempfile::tempdir().unwrap();
    assert!(rcm(d.path(), &["render", "--r", "3", "--out", "o"]).status.success());
    let svg = read(d.path(), "o/render.svg");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(rcm(d.path(), &["explore", "--r", "3", "--out", "o"]).status.success());
    let trace = read(d.path(), "o/trace.json");
    assert!(trace.contains("\"decision\"") && trace.contains("\"event_b_r\""));
}

#[test]
fn repeated_runs_are_identical() {
    let d = tempfile::tempdir().unwrap();
    let args = ["sweep", "--beta", "2,4", "--r", "2", "--n", "25", "--out", "o"];
    assert!(rcm(d.path(), &args).status.success());
    let first = read(d.path(), "o/sweep.json");
    assert!(rcm(d.path(), &args).status.success());
    assert_eq!(first, read(d.path(), "o/sweep.json"));
}
