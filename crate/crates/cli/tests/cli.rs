use std::path::Path;
use std::process::{Command, Output};

use qmem_core::calibrate::paper_default;

fn qmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn params_rows_and_header() {
    let out = qmem(&["params", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# qmem "), "{header}");
    assert!(
        header.contains(" params config_sha256=") && header.ends_with(" seed=3"),
        "{header}"
    );
    assert_eq!(lines.next(), Some("name,value"));
    let value = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{name},")))
            .unwrap_or_else(|| panic!("row {name}"))
            .parse()
            .unwrap()
    };
    assert!((value("stokes_detections_per_shot") / 0.005 - 1.0).abs() < 1e-9);
    assert!((value("write_intensity_w_per_m2") / 110.0 - 1.0).abs() < 0.03);
    let modes = value("spatial_mode_count");
    assert!(modes > 8000.0 / 5.0 && modes < 8000.0 * 5.0);
}

#[test]
fn phase_match_verdicts() {
    let out = qmem(&["phase-match"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(
        text.lines()
            .any(|l| l.starts_with("co_propagating,") && l.ends_with(",PASS")),
        "{text}"
    );
    assert!(
        text.lines()
            .any(|l| l.starts_with("counter_propagating,") && l.ends_with(",FAIL")),
        "{text}"
    );
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("PASS") && stderr.contains("FAIL"));
    assert_eq!(code(&qmem(&["phase-match", "--geometry", "sideways"])), 2);
}

#[test]
fn g2_scan_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let out = qmem(&[
            "g2-scan",
            "--trials",
            "30000",
            "--delays",
            "0:2:1 us",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("1", "b.csv"));
    assert_eq!(a, run("4", "c.csv"));
    let lines: Vec<&str> = a.lines().collect();
    assert!(lines[0].starts_with("# qmem ") && lines[0].contains("g2-scan"));
    assert_eq!(
        lines[1],
        "delay_us,g12,sigma_g12,g11,g22,R,nonclassical,N1,N2,N12,n_trials"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("0,") && lines[4].starts_with("2,"));
}

#[test]
fn config_file_round_trip_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "preset.toml", &paper_default().to_toml());
    let from_file = stdout(&qmem(&["params", "--config", &path]));
    let from_preset = stdout(&qmem(&["params"]));
    assert_eq!(from_file, from_preset);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write_config(dir.path(), "bad.toml", "this is [not toml");
    let mut zero_waist = paper_default().to_toml();
    zero_waist = zero_waist.replacen("waist = \"1.3e-3 m\"", "waist = \"0 m\"", 1);
    assert!(zero_waist.contains("\"0 m\""), "preset text changed shape");
    let zero_waist = write_config(dir.path(), "waist.toml", &zero_waist);
    for args in [
        vec!["params", "--config", &garbage],
        vec!["params", "--config", &zero_waist],
        vec!["params", "--config", "/nonexistent/config.toml"],
        vec!["g2-scan", "--trials", "0"],
        vec!["g2-scan", "--delays", "0:8:0.3 us"],
        vec!["g2-scan", "--delays", "1:2:1 parsecs"],
        vec!["g2-scan", "--workers", "0"],
        vec!["spectrum-scan", "--centers", " GHz"],
        vec!["spectrum-scan", "--integration", "1"],
        vec!["frobnicate"],
    ] {
        let out = qmem(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let unwritable = dir.path().join("missing").join("out.csv");
    assert_eq!(code(&qmem(&["params", "--out", unwritable.to_str().unwrap()])), 1);

    // SNR is only modeled for drive detunings of 0.3-3 GHz
    let mut c = paper_default();
    c.write.detuning = 0.1e9;
    let path = write_config(dir.path(), "near.toml", &c.to_toml());
    let out = qmem(&["params", "--config", &path]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn spectrum_scan_overlays_pressures() {
    let out = qmem(&[
        "spectrum-scan",
        "--centers",
        "-1,0,1 GHz",
        "--pressures",
        "1,10 Torr",
        "--channel",
        "both",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("channel,pressure_pa,etalon_center_ghz,expected_counts,signal,"));
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&qmem(&["--help"])), 0);
    assert_eq!(code(&qmem(&["--version"])), 0);
}
