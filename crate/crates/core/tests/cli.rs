use serde_json::Value;
use std::process::{Command, Output};

fn chirpframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirpframe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn factor_example() {
    let v = json(&chirpframe(&["factor", "--matrix", "2,1,0,0.5"]));
    assert!(num(&v, "theta").abs() < 1e-15);
    assert!((num(&v, "lambda") - 2.0).abs() < 1e-14);
    assert!((num(&v, "alpha") - 0.5).abs() < 1e-14);
    assert!((num(&v, "beta") - 2.0).abs() < 1e-14);
    assert!(num(&v, "reconstruction_error") <= 1e-12);
}

#[test]
fn singular_matrix_is_a_domain_error() {
    let out = chirpframe(&["factor", "--matrix", "1,2,2,4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("det"));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(chirpframe(&["factor", "--matrix", "1,2,3"]).status.code(), Some(2));
    assert_eq!(chirpframe(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(chirpframe(&["zak-zeros", "--n", "16"]).status.code(), Some(2));
}

#[test]
fn zak_zeros_example() {
    let v = json(&chirpframe(&["zak-zeros", "--lambda", "1", "--gamma", "1", "--n", "128"]));
    assert!((num(&v, "t") - 0.5).abs() < 1e-6);
    assert!((num(&v, "omega") - 0.5).abs() < 1e-6);
    assert_eq!(v["winding"].as_i64(), Some(1));
    assert!(num(&v, "simplicity_constant") > 0.0);
    assert_eq!(v["simple"].as_bool(), Some(true));
}

#[test]
fn window_design_example() {
    let v = json(&chirpframe(&["window-design", "--r", "1", "--u", "0.5"]));
    let quad = &v["atom"]["quad"];
    assert!((num(quad, "re") - 0.5).abs() < 1e-9);
    assert!((num(quad, "im") - 1.0).abs() < 1e-9);
}

#[test]
fn chirp_design_example() {
    let v = json(&chirpframe(&["chirp-design", "--lambda", "1"]));
    assert!((num(&v, "u") - 8.0 / 17.0).abs() < 1e-14);
    assert!((num(&v, "v") + 2.0 / 17.0).abs() < 1e-14);
    assert!((num(&v, "r") - 15.0 / 17.0).abs() < 1e-14);
}

#[test]
fn output_is_deterministic() {
    let args = ["zak-zeros", "--lambda", "-0.5", "--gamma", "2", "--n", "96"];
    let a = chirpframe(&args);
    let b = chirpframe(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_has_header_and_row() {
    let out = chirpframe(&["--format", "csv", "factor", "--matrix", "2,1,0,0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "theta,lambda,alpha,beta,reconstruction_error");
}

#[test]
fn sweep_marks_density_violating_rows() {
    let out = chirpframe(&[
        "--format", "csv", "sweep-det", "--dets", "0.5,1.1", "--l", "5", "--n", "256", "--m", "8",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("det,A_est,B_est,ratio,certified"));
    assert!(lines.next().unwrap().ends_with(",true"));
    assert!(lines.next().unwrap().ends_with(",density-violating"));
}

#[test]
fn config_file_supplies_command_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# factor a triangular lattice\ncommand = factor\nmatrix = 2,1,0,0.5\n").unwrap();
    let from_config = chirpframe(&["--config", path.to_str().unwrap()]);
    let direct = chirpframe(&["factor", "--matrix", "2,1,0,0.5"]);
    assert!(from_config.status.success());
    assert_eq!(from_config.stdout, direct.stdout);

    std::fs::write(&path, "command = factor\nbogus = 1\n").unwrap();
    assert_eq!(chirpframe(&["--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn heatmap_writes_svg_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zak.svg");
    let out = chirpframe(&["--output", path.to_str().unwrap(), "zak-heatmap", "--n", "16"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<rect").count(), 16 * 16);
    assert!(svg.contains("<circle"));
}

#[test]
fn selftest_flag_runs_module_battery() {
    let v = json(&chirpframe(&["frft-check", "--selftest"]));
    assert_eq!(v["passed"], v["total"]);
    let v = json(&chirpframe(&["selftest"]));
    assert_eq!(v["passed"], v["total"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_chirpframe"))
            .env("CHIRPFRAME_THREADS", threads)
            .args(["frft-check", "--theta", "1.1", "--nodes", "1024", "--half-width", "5"])
            .output()
            .unwrap()
    };
    let one = run("1");
    let two = run("2");
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn coarse_frft_grid_is_rejected() {
    let out = chirpframe(&["frft-check", "--theta", "0.7", "--nodes", "512", "--half-width", "6"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}
