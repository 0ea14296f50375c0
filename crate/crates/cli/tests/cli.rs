use std::process::{Command, Output};

use ader_core::grid::{cell_averages, Grid};
use ader_core::presets::{Preset, PresetName};
use ader_core::systems::BalanceLaw;

fn ader(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ader"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn help_lists_every_flag() {
    let mut text = String::new();
    for sub in ["solve", "converge", "stability"] {
        let out = ader(&[sub, "--help"]);
        assert!(out.status.success());
        text += &String::from_utf8(out.stdout).unwrap();
    }
    for flag in [
        "--preset", "--order", "--cells", "--cfl", "--alpha", "--t-out", "--boundary", "--out", "--seed", "--threads",
        "--predictor", "--scenarios", "--c-grid", "--r-grid",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn stiff_front_profile() {
    let (header, rows) = csv(&ader(&["solve", "--preset", "leveque-yee", "--cells", "100", "--order", "3"]));
    assert_eq!(header, ["x", "q_1", "exact_1"]);
    assert_eq!(rows.len(), 100);
    let front = rows.iter().filter(|r| r[1] >= 0.5).map(|r| r[0]).fold(f64::NAN, f64::max);
    assert!((front - 0.6).abs() <= 0.02, "front at {front}");
}

#[test]
fn coarse_euler_stays_admissible() {
    let (header, rows) = csv(&ader(&["solve", "--preset", "euler-smooth", "--cells", "16", "--order", "2"]));
    assert_eq!(header.len(), 7);
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
    assert!(rows.iter().all(|r| r[1] > 0.0));
}

#[test]
fn zero_output_time_echoes_initial_averages() {
    let (_, rows) = csv(&ader(&["solve", "--t-out", "0"]));
    let p = Preset::get(PresetName::LevequeYee);
    let grid = Grid::new(p.domain.0, p.domain.1, p.cells).unwrap();
    let init = cell_averages(&grid, |x| p.system.initial_condition(x));
    assert_eq!(rows.len(), init.len());
    for (row, q) in rows.iter().zip(&init) {
        assert_eq!(row[1], q[0]);
        assert_eq!(row[2], q[0]);
    }
}

#[test]
fn flags_override_preset_fields() {
    let (_, a) = csv(&ader(&["solve", "--preset", "linear-system", "--cells", "8", "--t-out", "0.25"]));
    let (_, b) = csv(&ader(&[
        "solve", "--preset", "linear-system", "--cells", "8", "--t-out", "0.25", "--alpha", "1.9", "--cfl", "0.1",
        "--boundary", "periodic", "--order", "3",
    ]));
    assert_eq!(a, b);
    let (_, c) = csv(&ader(&["solve", "--preset", "linear-system", "--cells", "8", "--t-out", "0.25", "--alpha", "4"]));
    assert_ne!(a, c);
}

#[test]
fn failures_exit_nonzero_with_diagnostic() {
    for args in [
        &["solve", "--order", "9"][..],
        &["solve", "--preset", "nope"],
        &["solve", "--cells", "0"],
        &["stability", "--alpha", "0.5"],
        &["stability", "--c-grid", "0:1"],
    ] {
        let out = ader(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty() || String::from_utf8_lossy(&out.stdout).lines().count() <= 1);
    }
}

#[test]
fn convergence_table_layout() {
    let (header, rows) = csv(&ader(&["converge", "--preset", "linear-system", "--order", "2"]));
    assert_eq!(header.join(","), "order,mesh,linf_err,linf_ord,l1_err,l1_ord,l2_err,l2_ord,cpu_s");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r[1]).collect::<Vec<_>>(), [16.0, 32.0, 64.0, 128.0]);
    assert!(rows[0][3].is_nan());
    assert!(rows.iter().all(|r| r[0] == 2.0));
}

#[test]
fn linear_system_third_order_row() {
    let (_, rows) = csv(&ader(&["converge", "--preset", "linear-system", "--order", "3", "--cells", "32,64"]));
    let r = &rows[1];
    assert_eq!(r[1], 64.0);
    assert!((r[4] / 3.07e-4 - 1.0).abs() < 0.02, "L1 error {}", r[4]);
    assert!((r[5] - 2.99).abs() < 0.05, "L1 order {}", r[5]);
}

#[test]
fn euler_fourth_order_rate() {
    let (_, rows) = csv(&ader(&["converge", "--preset", "euler-smooth", "--order", "4", "--cells", "64,128"]));
    assert!((rows[1][5] - 4.94).abs() < 0.3, "L1 order {}", rows[1][5]);
}

fn stability(args: &[&str]) -> Vec<Vec<f64>> {
    let mut all = vec!["stability"];
    all.extend_from_slice(args);
    let (header, rows) = csv(&ader(&all));
    assert_eq!(header, ["c", "r", "stable_fraction"]);
    rows
}

#[test]
fn first_order_limit_on_nonstiff_row() {
    let rows = stability(&["--order", "1", "--c-grid", "0.05:1.5:30", "--r-grid", "0:0:1"]);
    let spacing = 0.05;
    for r in &rows {
        if r[0] <= 1.0 - spacing {
            assert_eq!(r[2], 1.0, "c = {}", r[0]);
        }
        if r[0] >= 1.0 + spacing {
            assert_eq!(r[2], 0.0, "c = {}", r[0]);
        }
    }
}

#[test]
fn stability_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = ader(&[
            "--threads", threads, "stability", "--order", "3", "--predictor", "implicit", "--alpha", "2",
            "--scenarios", "20", "--c-grid", "0.1:1.2:12", "--r-grid", "0:-5:6", "--seed", "7", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "4"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 12 * 6);
}

#[test]
fn large_alpha_shrinks_stable_area() {
    let area = |alpha: &str| -> f64 {
        stability(&[
            "--order", "5", "--predictor", "implicit", "--alpha", alpha, "--scenarios", "20", "--c-grid",
            "0.05:1.2:24", "--r-grid", "0:-10:21",
        ])
        .iter()
        .map(|r| r[2])
        .sum()
    };
    assert!(area("100") < area("1"));
}
