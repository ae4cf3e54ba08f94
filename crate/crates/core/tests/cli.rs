use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn photocool(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photocool"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn steady_ratio_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(
        &["steady", "--delta", "0", "--nu", "6", "--gamma-plus", "1", "--gamma-minus", "0.2", "--gamma-zero", "0.2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!((v["rz"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["sz"].as_f64().unwrap(), 0.0);
    assert_eq!(v["reference_rate"], "gamma_plus");
    assert_eq!(v["config"]["gamma_minus"], 0.2);
}

#[test]
fn steady_tie_is_heating_not_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["steady", "--gamma", "1", "--delta", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["n_s"], "heating");
}

#[test]
fn invalid_omega_in_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "# bad drive\nomega = -1.0\n").unwrap();
    let o = photocool(&["steady", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omega"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_sections() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "omega = 4.0\nnu = 6.0\n\n[steady]\nomega = 5.0\ndelta = 1.0\n",
    )
    .unwrap();
    let o = photocool(&["steady", "--config", "run.toml", "--section", "steady", "--delta", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cfg = &json(&o)["config"];
    assert_eq!(cfg["omega"], 5.0);
    assert_eq!(cfg["nu"], 6.0);
    assert_eq!(cfg["delta"], 2.0);
}

#[test]
fn bad_flag_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["steady", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = photocool(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn trajectory_ode_column_matches() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(
        &["trajectory", "--ode", "--t-end", "50", "--samples", "101", "--nu", "6", "--gamma-minus", "0.2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "t,rz,re_rplus,im_rplus,n,n_ode");
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[4] - f[5]).abs() <= 1e-8 * f[4].abs(), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn trajectory_at_fixed_point_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let params = ["--delta", "0", "--nu", "6", "--gamma-plus", "1", "--gamma-minus", "0.2", "--gamma-zero", "0.2"];
    let s = photocool(&[&["steady"][..], &params].concat(), dir.path());
    let n_s = json(&s)["n_s"].as_f64().unwrap();
    let rz = json(&s)["rz"].as_f64().unwrap();
    let (n0, rz0) = (n_s.to_string(), rz.to_string());
    let args = [&["trajectory", "--format", "json", "--n0", &n0, "--rz0", &rz0][..], &params].concat();
    let o = photocool(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for p in json(&o)["points"].as_array().unwrap() {
        assert!((p["n"].as_f64().unwrap() - n_s).abs() < 1e-12 * n_s);
        assert!((p["rz"].as_f64().unwrap() - rz).abs() < 1e-12);
    }
}

#[test]
fn conflicting_initial_states_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["trajectory", "--rz0", "0.5", "--sz0", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

fn rerun_is_identical(first: &[&str], format: &str) {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(first, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::write(dir.path().join(format!("prev.{format}")), &o.stdout).unwrap();
    let name = format!("prev.{format}");
    let again = photocool(&[first[0], "--config", &name], dir.path());
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn rerun_from_embedded_config() {
    rerun_is_identical(&["steady", "--omega", "3", "--delta", "1.5", "--nu", "4", "--gamma-minus", "0.3"], "json");
    rerun_is_identical(&["steady", "--format", "csv", "--nu", "8"], "csv");
    rerun_is_identical(&["trajectory", "--ode", "--samples", "7", "--sz0", "0.2", "--splus0-im", "0.1"], "csv");
    rerun_is_identical(&["sweep", "--format", "json", "--variable", "eta", "--values", "0.05,0.1,0.2"], "json");
}

#[test]
fn preset_csv_files_rerun_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["sweep", "--preset", "fig2", "--format", "csv", "--out-dir", "a"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut files: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 3);
    let first = fs::read_to_string(&files[0]).unwrap();
    assert!(first.starts_with("# config: "));
    let header = first.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("gamma_ratio,"));
    assert!(first.contains(",heating,"));

    let o = photocool(
        &["sweep", "--config", files[0].to_str().unwrap(), "--out-dir", "b"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in &files {
        let twin = dir.path().join("b").join(f.file_name().unwrap());
        assert_eq!(fs::read(f).unwrap(), fs::read(twin).unwrap());
    }
}

#[test]
fn unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["sweep", "--preset", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fig1"));
    let o = photocool(&["presets", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn presets_listing() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["presets"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<_> = json(&o).as_array().unwrap().iter().map(|p| p["name"].clone()).collect();
    assert_eq!(names, ["fig1", "fig1e", "fig2", "fig3"]);
}

#[test]
fn sweep_error_rows_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // η = 0 makes the phonon number undefined on that row only
    let o = photocool(&["sweep", "--format", "json", "--delta", "2", "--variable", "eta", "--values", "0,0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    let rows = v["curves"][0]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["error"]["tag"], "zero-coupling");
    assert!(rows[1]["error"].is_null());
    assert!(rows[1]["n_s"].is_number());
    let columns = v["curves"][0]["columns"].as_array().unwrap();
    assert_eq!(v["config"]["observables"].as_array().unwrap(), columns);
}

#[test]
fn validate_resonance_passes() {
    let dir = tempfile::tempdir().unwrap();
    let delta = (2.0 * 11f64.sqrt()).to_string();
    let o = photocool(
        &["validate", "--omega", "5", "--delta", &delta, "--nu", "12", "--eta", "0.1", "--gamma", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!(v["rel_error_n"].as_f64().unwrap() < 0.15);
    // this point is outside the adiabatic regime, which is reported but
    // does not block the comparison
    assert!(stderr(&o).contains("warning"));
    assert!(stderr(&o).contains("slow_cooling_vs_inversion"));
}

#[test]
fn validate_rejects_zero_coupling_and_heating() {
    let dir = tempfile::tempdir().unwrap();
    let o = photocool(&["validate", "--eta", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zero-coupling"));
    let o = photocool(&["validate", "--delta", "-3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("heating"));
}

#[test]
fn validate_mismatch_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    // far outside the resolved-sideband regime the closed form is off
    let o = photocool(
        &["validate", "--omega", "2", "--delta", "1", "--nu", "0.5", "--eta", "0.2", "--gamma", "1", "--n-max", "16", "--converge", "false"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}\n{}", stdout(&o), stderr(&o));
    assert_eq!(json(&o)["pass"], false);
    assert!(stderr(&o).contains("oracle-mismatch"));
}
