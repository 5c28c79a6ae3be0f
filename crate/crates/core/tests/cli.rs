use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectra::expr::parse;
use spectra::spectrum::CSV_HEADER;

fn operators() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../operators")
}

fn spectra(args: &[&str], out: &Path) -> Output {
    spectra_env(args, out, None)
}

fn spectra_env(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectra"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.env("SPECTRA_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn op(name: &str) -> String {
    operators().join(name).to_string_lossy().into_owned()
}

fn write_op(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const OSCILLATING: &str = r#"
m = 2
n = 1
k = 1
a0 = "sin(x)"
a1 = "0"
a2 = "1"
b0 = "0"
b1 = "1"
c0 = "0"
c1 = "1"
d = "2"
"#;

#[test]
fn check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spectra(&["check", "--config", &op("gaussian_coupled.toml")], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("check.json")).unwrap()).unwrap();
    assert!(json["records"].as_array().unwrap().len() >= 16);

    let odd = write_op(tmp.path(), "odd.toml", "m = 3\nn = 1\nk = 2\n");
    assert_eq!(spectra(&["check", "--config", &odd], tmp.path()).status.code(), Some(2));
    let unknown = write_op(tmp.path(), "unknown.toml", &format!("{OSCILLATING}\nextra = \"1\"\n"));
    let out = spectra(&["check", "--config", &unknown], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra"));
    let missing = tmp.path().join("nope.toml");
    assert_eq!(spectra(&["check", "--config", missing.to_str().unwrap()], tmp.path()).status.code(), Some(3));
    assert_eq!(spectra(&["check", "--config", &op("gaussian_coupled.toml"), "--window", "1,1,0,1"], tmp.path()).status.code(), Some(2));
}

#[test]
fn quadratic_well_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--config", &op("quadratic_well.toml"), "--window", "-10,10,-10,10", "--svg"];
    let out = spectra(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let (mut regular, mut singular) = (0, 0);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7, "{line}");
        let (re, im): (f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap());
        match f[0] {
            "regular" => {
                regular += 1;
                assert_eq!(f[1], "·");
                assert!(im == 0.0 && re <= -1.0, "{line}");
            }
            "singular" => {
                singular += 1;
                assert!(f[1] == "+" || f[1] == "-");
                assert!(im.abs() <= 1e-8 && re >= -1e-8, "{line}");
            }
            other => panic!("unexpected part {other}"),
        }
    }
    assert!(regular > 1000 && singular > 1000);
    let svg = fs::read_to_string(tmp.path().join("spectrum.svg")).unwrap();
    assert!(svg.contains(r#"class="regular""#) && svg.contains(r#"class="singular""#));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["settings"]["window"][3], 10.0);
}

#[test]
fn csv_is_deterministic_across_runs_and_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["spectrum", "--config", &op("gaussian_coupled.toml")];
    assert_eq!(spectra_env(&args, a.path(), Some("1")).status.code(), Some(0));
    assert_eq!(spectra_env(&args, b.path(), Some("3")).status.code(), Some(0));
    let x = fs::read(a.path().join("spectrum.csv")).unwrap();
    let y = fs::read(b.path().join("spectrum.csv")).unwrap();
    assert!(x == y, "CSV differs between runs");
}

#[test]
fn failing_assumption_d_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_op(tmp.path(), "osc.toml", OSCILLATING);
    let out = spectra(&["spectrum", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(!tmp.path().join("spectrum.csv").exists());

    let out = spectra(&["spectrum", "--config", &cfg, "--force"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with(CSV_HEADER));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(report["forced"], true);
    assert!(!report["report"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn oracle_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spectra(&["oracle", "--config", &op("quadratic_well.toml")], tmp.path());
    assert_eq!(out.status.code(), Some(5));

    let out = spectra(&["oracle", "--config", &op("quadratic_well.toml"), "--discretize", "--length", "6", "--nodes", "72"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(json["refused"].as_array().unwrap().len(), 2);
    assert_eq!(json["discretization"]["truncation"]["runs"].as_array().unwrap().len(), 3);
    let eig = fs::read_to_string(tmp.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 1 + 2 * 72);

    let out = spectra(&["oracle", "--config", &op("decoupled.toml")], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let det = fs::read_to_string(tmp.path().join("oracle_det.csv")).unwrap();
    let at0: Vec<(f64, f64, bool)> = det
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "0")
        .map(|f| (f[2].parse().unwrap(), f[3].parse().unwrap(), f[4] == "true"))
        .collect();
    assert!(at0.iter().any(|&(re, im, at_d)| re == 3.0 && im == -2.0 && at_d));
    assert!(at0.iter().any(|&(re, im, at_d)| (re - 1.0).abs() < 1e-12 && (im - 1.0).abs() < 1e-12 && !at_d));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle.json")).unwrap()).unwrap();
    assert!(json["determinant"]["singular_to_det"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn print_schur_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spectra(&["print-schur", "--config", &op("quadratic_well.toml")], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    let p0 = parse(lines[0].strip_prefix("p0 = ").unwrap()).unwrap();
    let l = num_complex::Complex64::new(0.3, 1.7);
    assert!((p0.eval(2.0, l).unwrap() + l).norm() < 1e-14);
    let p2 = parse(lines[2].strip_prefix("p2 = ").unwrap()).unwrap();
    assert!((p2.eval(2.0, l).unwrap() - (1.0 + 1.0 / (4.0 + l))).norm() < 1e-14);
    let delta = parse(lines[3].strip_prefix("delta = ").unwrap()).unwrap();
    assert!((delta.eval(3.0, l).unwrap().re + 10.0).abs() < 1e-14);
}
