//! End-to-end tests of the `microgen` binary: argument plumbing, CSV output,
//! exit codes, and diagnostic categories.

use std::path::PathBuf;
use std::process::{Command, Output};

use microgen::device::DeviceModel;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_microgen"))
}

fn reference_device_path() -> String {
    format!(
        "{}/devices/paper_nominal.ini",
        env!("CARGO_MANIFEST_DIR")
    )
}

/// Write a device file into the target tmp dir and return its path.
fn write_device(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("microgen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// Reference device with a small coil and relaxed gap: flux work stays fast.
fn toy_device() -> DeviceModel {
    let mut dev = DeviceModel::paper_nominal();
    dev.coil.turns = 2;
    dev.assembly.coil_gap = 100e-6;
    dev.coil.plane_height = 100e-6;
    dev
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(2).collect()
}

#[test]
fn modal_on_reference_device() {
    let out = bin()
        .args(["modal", "--device", &reference_device_path()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    assert!(csv.starts_with("# units: N/m,kg,Hz\n"));
    let f1: f64 = data_rows(&csv)[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((f1 - 1007.6).abs() < 1.0, "f1 {f1}");
}

#[test]
fn unknown_key_is_a_parse_error_with_exit_2() {
    let bad = microgen::device::PAPER_NOMINAL.replace("[beam]", "[beam]\nbeam_color = 1");
    let path = write_device("unknown_key.ini", &bad);
    let out = bin()
        .args(["modal", "--device", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_str(&out);
    assert!(err.starts_with("error[parse]"), "stderr: {err}");
    assert!(err.contains("beam_color"), "stderr: {err}");
}

#[test]
fn missing_device_file_is_an_io_error_with_exit_2() {
    let out = bin()
        .args(["modal", "--device", "/nonexistent/device.ini"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error[io]"));
}

#[test]
fn fit_recovers_thickness_for_measured_resonance() {
    let out = bin()
        .args([
            "fit",
            "--device",
            &reference_device_path(),
            "--target-hz",
            "470",
            "--variable",
            "beam_thickness",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    let fields: Vec<&str> = data_rows(&csv)[0].split(',').collect();
    assert_eq!(fields[0], "beam_thickness");
    let value: f64 = fields[1].parse().unwrap();
    assert!((value - 12.0e-6).abs() < 0.2e-6, "value {value}");
}

#[test]
fn unreachable_fit_target_exits_3() {
    let out = bin()
        .args([
            "fit",
            "--device",
            &reference_device_path(),
            "--target-hz",
            "2000",
            "--variable",
            "beam_thickness",
            "--lo",
            "5e-6",
            "--hi",
            "15e-6",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_str(&out).starts_with("error[infeasible]"));
}

#[test]
fn unknown_variable_is_a_domain_error_with_exit_2() {
    let out = bin()
        .args([
            "fit",
            "--device",
            &reference_device_path(),
            "--target-hz",
            "470",
            "--variable",
            "banana",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error[domain]"));
}

#[test]
fn sweep_grid_contract_and_determinism() {
    let path = write_device("toy_sweep.ini", &toy_device().serialize());
    let run = || {
        bin()
            .args([
                "sweep",
                "--device",
                path.to_str().unwrap(),
                "--f-lo",
                "100",
                "--f-hi",
                "2000",
                "--points",
                "191",
            ])
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success(), "stderr: {}", stderr_str(&first));
    let csv = stdout_str(&first);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 191);

    // peak near the first mode
    let mut peak = (0.0f64, 0.0f64);
    for row in &rows {
        let mut it = row.split(',');
        let f: f64 = it.next().unwrap().parse().unwrap();
        let amp: f64 = it.next().unwrap().parse().unwrap();
        if amp > peak.1 {
            peak = (f, amp);
        }
    }
    assert!((peak.0 - 1007.6).abs() < 15.0, "peak at {} Hz", peak.0);

    // byte-identical across runs
    let second = run();
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn out_flag_writes_the_same_csv() {
    let device = write_device("toy_out.ini", &toy_device().serialize());
    let out_path = device.with_file_name("modal_out.csv");
    let piped = bin()
        .args(["modal", "--device", device.to_str().unwrap()])
        .output()
        .unwrap();
    let to_file = bin()
        .args([
            "modal",
            "--device",
            device.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(written, stdout_str(&piped));
}

#[test]
fn stress_defaults_to_fifty_micron_amplitude() {
    let out = bin()
        .args(["stress", "--device", &reference_device_path()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = stdout_str(&out);
    let fields: Vec<&str> = data_rows(&csv)[0].split(',').collect();
    let sigma: f64 = fields[1].parse().unwrap();
    assert!((sigma - 937.5e6).abs() / 937.5e6 < 1e-9, "sigma {sigma}");
}

#[test]
fn flux_command_emits_requested_grid() {
    let path = write_device("toy_flux.ini", &toy_device().serialize());
    let out = bin()
        .args([
            "flux",
            "--device",
            path.to_str().unwrap(),
            "--points",
            "7",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    assert!(csv.starts_with("# units: m,Wb,Wb/m\n"));
    assert_eq!(data_rows(&csv).len(), 7);
}

#[test]
fn simulate_produces_a_trace() {
    let path = write_device("toy_sim.ini", &toy_device().serialize());
    let out = bin()
        .args([
            "simulate",
            "--device",
            path.to_str().unwrap(),
            "--duration",
            "0.01",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    let rows = data_rows(&csv);
    assert!(rows.len() > 1000, "rows {}", rows.len());
    // displacement should be oscillating, not stuck at zero
    let any_motion = rows
        .iter()
        .any(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap().abs() > 0.0);
    assert!(any_motion);
}

#[test]
fn report_emits_five_comparison_rows() {
    let path = write_device("toy_report.ini", &toy_device().serialize());
    let out = bin()
        .args(["report", "--device", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("resonance_frequency,Hz,"));
    assert!(rows[1].starts_with("coil_resistance,ohm,"));
}

#[test]
fn optimize_reports_best_design_and_writes_log() {
    let device = write_device("toy_opt.ini", &toy_device().serialize());
    let log_path = device.with_file_name("opt_log.csv");
    let out = bin()
        .args([
            "optimize",
            "--device",
            device.to_str().unwrap(),
            "--variable",
            "beam_thickness:8e-6:3e-5",
            "--budget",
            "200",
            "--log",
            log_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = stdout_str(&out);
    let fields: Vec<&str> = data_rows(&csv)[0].split(',').collect();
    let thickness: f64 = fields[0].parse().unwrap();
    let f1: f64 = fields[1].parse().unwrap();
    assert!(thickness >= 8e-6 && thickness <= 3e-5);
    assert!((200.0..=1500.0).contains(&f1), "f1 {f1} outside band");

    let log = std::fs::read_to_string(&log_path).unwrap();
    assert!(log.lines().count() > 10, "evaluation log should have entries");
}
