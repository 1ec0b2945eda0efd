use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minimax_fir::io::{format_filter, parse_filter};
use minimax_fir::pipeline::linear_phase_baseline;
use minimax_fir::spectrum::{magnitude_response, uniform_omegas, Band, CoeffDomain, DesignSpec, FirFilter};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minimax-fir"))
}

fn spec_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn design_then_certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("lowpass_n26.toml");
    let out = dir.path().join("run");
    let o = run(&["design", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["filter.txt", "autocorr.txt", "certificate.json", "summary.json", "zeros.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["alternations"], 28);
    assert_eq!(summary["required"], 28);
    let cert = json(&out.join("certificate.json"));
    assert_eq!(cert["optimal"], true);
    assert_eq!(cert["alternation_freqs_pi"].as_array().unwrap().len(), 28);

    let filter = out.join("filter.txt");
    let o = run(&["certify", filter.to_str().unwrap(), spec.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["found"], 28);
}

#[test]
fn min_and_max_phase_share_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("lowpass_n20.toml");
    let mut filters = Vec::new();
    for phase in ["min", "max"] {
        let out = dir.path().join(phase);
        let o = run(&["design", spec.to_str().unwrap(), "--phase", phase, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        filters.push(parse_filter(&std::fs::read_to_string(out.join("filter.txt")).unwrap()).unwrap());
    }
    assert_ne!(filters[0], filters[1]);
    let w = uniform_omegas(512, CoeffDomain::Real);
    let (a, b) = (magnitude_response(&filters[0], &w), magnitude_response(&filters[1], &w));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn linear_phase_baseline_is_suboptimal() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DesignSpec::new(26, vec![Band::pass(0.0, 0.36), Band::stop(0.42, 1.0)], 3.0, CoeffDomain::Real).unwrap();
    let h = linear_phase_baseline(&spec).unwrap();
    let path = dir.path().join("baseline.txt");
    std::fs::write(&path, format_filter(&h)).unwrap();
    let o = run(&["certify", path.to_str().unwrap(), spec_path("lowpass_n26.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["found"].as_u64().unwrap() < 28);
}

#[test]
fn certify_rejects_bad_coefficient_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("lowpass_n26.toml");
    let truncated = dir.path().join("short.txt");
    std::fs::write(&truncated, "# order=26 domain=real\n0.1\n0.2\n").unwrap();
    assert_eq!(code(&run(&["certify", truncated.to_str().unwrap(), spec.to_str().unwrap()])), 2);
    let wrong_order = dir.path().join("order.txt");
    std::fs::write(&wrong_order, format_filter(&FirFilter::from_real(&[1.0, 0.5]).unwrap())).unwrap();
    assert_eq!(code(&run(&["certify", wrong_order.to_str().unwrap(), spec.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["certify", "/nonexistent/file.txt", spec.to_str().unwrap()])), 2);
}

#[test]
fn design_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_band = dir.path().join("band.toml");
    std::fs::write(&bad_band, "order = 4\nk_des = 1.0\n[[bands]]\nlo = 0.5\nhi = 0.2\ndesired = 1\n").unwrap();
    let o = run(&["design", bad_band.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "order = 4\nk_des = 1.0\ncolour = 3\nbands = []\n").unwrap();
    assert_eq!(code(&run(&["design", unknown.to_str().unwrap()])), 2);

    let syntax = dir.path().join("syntax.toml");
    std::fs::write(&syntax, "order = \n").unwrap();
    let o = run(&["design", syntax.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1, column"));

    let spec = spec_path("lowpass_n26.toml");
    let o = run(&["design", spec.to_str().unwrap(), "--phase", "sideways"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn roots_above_limit_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("highpass_n500.toml");
    let o = run(&["design", spec.to_str().unwrap(), "--factorization", "roots", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cepstral"));
}

#[test]
fn response_columns() {
    let dir = tempfile::tempdir().unwrap();
    let unit = dir.path().join("unit.txt");
    std::fs::write(&unit, "# order=0 domain=real\n1\n").unwrap();
    let o = run(&["response", unit.to_str().unwrap(), "--points", "16"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("freq_pi,magnitude,magnitude_db,group_delay"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[1] == 1.0 && r[2] == 0.0));

    let sym = dir.path().join("sym.txt");
    std::fs::write(&sym, format_filter(&FirFilter::from_real(&[0.2, -0.5, 1.0, 0.3, 1.0, -0.5, 0.2]).unwrap())).unwrap();
    let out = dir.path().join("sym.csv");
    let o = run(&["response", sym.to_str().unwrap(), "--points", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for l in std::fs::read_to_string(out).unwrap().lines().skip(1) {
        let gd: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
        assert!(gd.is_nan() || (gd - 3.0).abs() < 1e-9, "{gd}");
    }
}

#[test]
fn ksweep_table_and_bounds() {
    let spec = spec_path("sweep_k2.toml");
    let o = run(&["ksweep", spec.to_str().unwrap(), "--k-max", "5000", "--count", "8"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sign changes: 1"));

    let o = run(&["ksweep", spec.to_str().unwrap(), "--k-min", "10", "--k-max", "20"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("24"));

    let o = run(&["ksweep", spec.to_str().unwrap(), "--k-min", "100", "--k-max", "100", "--count", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no crossing"));
}

#[test]
fn complex_spec_designs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("complex_n10.toml");
    let o = run(&["design", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["required"], 22);
    let h = parse_filter(&std::fs::read_to_string(dir.path().join("filter.txt")).unwrap()).unwrap();
    assert_eq!(h.domain(), CoeffDomain::Complex);
}
