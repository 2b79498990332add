use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn collinear(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collinear")).args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn summary_rows(out: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "E_k,stretch,theta,W_00,unitarity_defect,max_mode_discrepancy,status");
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

/// Matrix rows of a `W_<mode>.csv`.
fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

#[test]
fn flat_channel_gives_identity_in_every_mode() {
    let out = tempfile::tempdir().unwrap();
    let r = collinear(&["run", scenario("flat_channel.json").to_str().unwrap()], out.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let point = out.path().join("point_000");
    for f in ["path.csv", "profile.csv", "parameters.csv", "mode_diff.csv"] {
        assert!(point.join(f).exists(), "{f}");
    }
    for mode in ["hermite", "legendre", "oracle"] {
        let w = read_matrix(&point.join(format!("W_{mode}.csv")));
        assert_eq!(w.len(), 11);
        for (m, r) in w.iter().enumerate() {
            for (n, &x) in r.iter().enumerate() {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((x - expect).abs() < 1e-8, "{mode} W[{m}][{n}] = {x}");
            }
        }
    }
    let m = manifest(out.path());
    assert_eq!(m["normalization"], "factorial");
    assert!(m["drive_convention"].as_str().unwrap().len() > 10);
    assert_eq!(summary_rows(out.path()).len(), 1);
}

#[test]
fn empty_sweep_writes_headers_and_warns() {
    let out = tempfile::tempdir().unwrap();
    let r = collinear(&["sweep", scenario("two_channel.json").to_str().unwrap(), "--energies", ""], out.path());
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("warning: empty sweep"));
    assert!(summary_rows(out.path()).is_empty());
    assert_eq!(manifest(out.path())["points"].as_array().unwrap().len(), 0);
}

#[test]
fn eight_energy_sweep_fills_the_summary() {
    let out = tempfile::tempdir().unwrap();
    let r = collinear(&["run", scenario("two_channel.json").to_str().unwrap()], out.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = summary_rows(out.path());
    assert_eq!(rows.len(), 8);
    let energies: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(energies.windows(2).all(|w| w[1] > w[0]));
    for r in &rows {
        assert_eq!(r[6], "ok");
        let theta: f64 = r[2].parse().unwrap();
        let w00: f64 = r[3].parse().unwrap();
        assert!(theta > 0.0 && theta < 0.2);
        assert!((w00 - (1.0 - theta).sqrt()).abs() < 1e-4);
        let discrepancy: f64 = r[5].parse().unwrap();
        assert!(discrepancy < 1e-3, "legendre vs oracle {discrepancy}");
    }
    assert!(out.path().join("point_007/W_oracle.csv").exists());
}

#[test]
fn single_energy_sweep_matches_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = scenario("sudden_jump.json");
    let cfg = cfg.to_str().unwrap();
    assert!(collinear(&["run", cfg, "--modes", "hermite,legendre"], a.path()).status.success());
    assert!(collinear(&["sweep", cfg, "--energies", "2.0", "--modes", "hermite,legendre"], b.path()).status.success());
    assert_eq!(summary_rows(a.path()), summary_rows(b.path()));
    let theta: f64 = summary_rows(a.path())[0][2].parse().unwrap();
    assert!((theta - 1.0 / 9.0).abs() < 1e-6);
}

#[test]
fn duplicate_energies_give_duplicate_rows() {
    let out = tempfile::tempdir().unwrap();
    let cfg = scenario("two_channel.json");
    let r = collinear(&["sweep", cfg.to_str().unwrap(), "--energies", "2,1,2", "--modes", "legendre"], out.path());
    assert!(r.status.success());
    let rows = summary_rows(out.path());
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1], rows[2]);
    let warnings = manifest(out.path())["warnings"].to_string();
    assert!(warnings.contains("duplicate point"), "{warnings}");
}

#[test]
fn adiabatic_stretch_lowers_theta() {
    let out = tempfile::tempdir().unwrap();
    assert!(collinear(&["run", scenario("tanh_adiabatic.json").to_str().unwrap()], out.path()).status.success());
    let thetas: Vec<f64> = summary_rows(out.path()).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(thetas.len(), 4);
    assert!(thetas.windows(2).all(|w| w[1] < w[0]), "{thetas:?}");
}

#[test]
fn failed_points_are_recorded_and_do_not_abort() {
    let dir = tempfile::tempdir().unwrap();
    // E_k = 0.1 cannot cross the 0.3 barrier
    let out = dir.path().join("out");
    let r = collinear(
        &["sweep", scenario("two_channel.json").to_str().unwrap(), "--energies", "0.1,2.0", "--modes", "legendre"],
        &out,
    );
    assert!(r.status.success());
    let rows = summary_rows(&out);
    assert!(rows[0][6].starts_with("error: "), "{:?}", rows[0]);
    assert_eq!(rows[0][2], "nan");
    assert_eq!(rows[1][6], "ok");
    // a run with a failing point exits nonzero
    let cfg = std::fs::read_to_string(scenario("two_channel.json"))
        .unwrap()
        .replace(r#""range": {"start": 1.0, "stop": 4.5, "count": 8}"#, r#""energies": [0.1]"#);
    let r = collinear(&["run", write_config(dir.path(), &cfg).to_str().unwrap(), "--modes", "legendre"], &out);
    assert!(!r.status.success());
}

#[test]
fn invalid_config_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"name\": \"x\",\n  \"system\": 3\n}\n");
    let r = collinear(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("line 3, column"), "{err}");

    let bad_energy = std::fs::read_to_string(scenario("two_channel.json"))
        .unwrap()
        .replace(r#""range": {"start": 1.0, "stop": 4.5, "count": 8}"#, r#""energies": [1.0, -2.0]"#);
    let r = collinear(&["run", write_config(dir.path(), &bad_energy).to_str().unwrap()], &dir.path().join("out"));
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("positive"));

    let r = collinear(&["run", scenario("flat_channel.json").to_str().unwrap(), "--modes", "fourier"], dir.path());
    assert!(!r.status.success());
}

#[test]
fn paper_literal_flag_is_recorded() {
    let out = tempfile::tempdir().unwrap();
    let r = collinear(
        &["run", scenario("sudden_jump.json").to_str().unwrap(), "--modes", "hermite", "--paper-literal"],
        out.path(),
    );
    assert!(r.status.success());
    let m = manifest(out.path());
    assert_eq!(m["normalization"], "paper-literal");
    assert!(m["normalization_formula"].as_str().unwrap().starts_with("paper-literal"));
    let w = std::fs::read_to_string(out.path().join("point_000/W_hermite.csv")).unwrap();
    assert!(w.contains("# normalization=paper-literal"));
}

#[test]
fn resonant_scenario_records_the_arbitration() {
    let out = tempfile::tempdir().unwrap();
    assert!(collinear(&["run", scenario("resonant_drive.json").to_str().unwrap()], out.path()).status.success());
    let arb = &manifest(out.path())["normalization_arbitration"];
    assert_eq!(arb["passed"], serde_json::json!(["factorial"]));
    assert_eq!(arb["in_force"], "factorial");
}
