use std::process::{Command, Output};

fn eyewitness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eyewitness")).args(args).output().unwrap()
}

fn first_lines(out: &Output, n: usize) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().take(n).map(str::to_string).collect()
}

#[test]
fn eye_curve_header_and_origin() {
    let out = eyewitness(&["eye-curve"]);
    assert!(out.status.success());
    assert_eq!(first_lines(&out, 2), ["nbar,p_seen", "0,0"]);
}

#[test]
fn eye_curve_matches_library_at_87_5() {
    let out = eyewitness(&["eye-curve", "--set", "nbar_start=87.5", "--set", "nbar_stop=87.5"]);
    let row = first_lines(&out, 2)[1].clone();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    let det = eyewitness_core::detector::DetectorSpec::eye();
    let lib = eyewitness_core::detector::seen_prob_coherent(&det, 87.5).unwrap();
    assert!((v - lib).abs() <= 1e-12);
}

#[test]
fn calibrate_writes_amplitudes_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.csv");
    let status = eyewitness(&["calibrate", "--out", out.to_str().unwrap()]).status;
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("name,amplitude\nbeta0,2.71"));
    let curves = std::fs::read_to_string(dir.path().join("cal_curves.csv")).unwrap();
    assert!(curves.starts_with("beta,n,p_no_click\n"));
}

#[test]
fn bloch_header() {
    let out = eyewitness(&["bloch", "--set", "amp_stop=0.2"]);
    assert_eq!(first_lines(&out, 2), ["amplitude,v_x,v_y,v_z,offset", "0,0,0,0,1"]);
}

#[test]
fn config_errors_exit_with_two() {
    let out = eyewitness(&["eye-curve", "--set", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ConfigError"));
    let out = eyewitness(&["eye-curve", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eyewitness(&["sweep", "--set", "T=0.4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_with_three() {
    let out = eyewitness(&["eye-curve", "--set", "eta=1.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ParameterError"));
    let out = eyewitness(&["validate", "--set", "T=2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# eye curve\nnbar_start = 10\nnbar_stop = 12\ntheta = 3\n").unwrap();
    let out = eyewitness(&["eye-curve", "--config", cfg.to_str().unwrap(), "--set", "nbar_stop=11"]);
    assert!(out.status.success());
    let lines = first_lines(&out, 10);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,"));
}
