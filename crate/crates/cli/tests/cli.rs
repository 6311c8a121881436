use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper.scenario");

fn splitbeam(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitbeam"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, sets: &[&str], out: &Path) -> Output {
    let mut args = vec![cmd, "--config", SCENARIO];
    for s in sets {
        args.push("--set");
        args.push(s);
    }
    splitbeam(&args, out)
}

fn csv_value(path: &Path, quantity: &str, tag: &str) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{quantity},")) && l.ends_with(tag))
        .unwrap_or_else(|| panic!("{quantity} [{tag}] missing from\n{text}"));
    line.split(',').nth(1).unwrap().parse().unwrap()
}

fn noise_row(dir: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(dir.join("noise.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("mean_sum,mean_diff,var_sum,var_diff,var_left,var_right,db_sum,db_diff,db_half")
    );
    lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn noise_reproduces_levels() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("noise", &[], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let row = noise_row(dir.path());
    assert!(row[6].abs() < 0.005);
    assert!((row[7] + 2.50).abs() < 0.005);
    assert!((row[8] + 1.07).abs() < 0.005);
    let cmp = dir.path().join("noise_comparison.csv");
    assert_eq!(csv_value(&cmp, "db_diff", "paper-measured"), -2.34);
    assert_eq!(csv_value(&cmp, "chain_efficiency", "fitted"), 0.79);
    let text = std::fs::read_to_string(&cmp).unwrap();
    for line in text.lines().skip(1) {
        let tag = line.rsplit(',').next().unwrap();
        assert!(["predicted", "paper-measured", "fitted"].contains(&tag), "{line}");
    }
    for f in ["noise_traces.csv", "noise_traces.svg"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn no_squeezing_means_shot_noise() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("noise", &["source.squeezing_db=0"], dir.path()).status.success());
    let row = noise_row(dir.path());
    for v in &row[6..9] {
        assert!(v.abs() < 1e-9, "{v}");
    }
}

#[test]
fn quarter_turn_anti_squeezes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("noise", &["source.relative_phase=1.5707963267948966"], dir.path()).status.success());
    assert!(noise_row(dir.path())[7] > 0.0);
}

#[test]
fn sql_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("sql", &["sql.n_values=[1.0, 100.0]", "sql.w0_values=[1.0, 2.0]"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sql.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!((rows[0][2] - 0.62666).abs() < 1e-5);
    for r in &rows {
        assert!(r[4] < 1e-6);
    }
    // rows are grouped by w0: doubling it doubles the limit
    for k in 0..2 {
        // six printed digits
        assert!((rows[k + 2][2] / rows[k][2] - 2.0).abs() < 2e-5);
        assert!((rows[k + 2][3] / rows[k][3] - 2.0).abs() < 2e-5);
    }
}

#[test]
fn spectrum_reports_improvement() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", &[], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = dir.path().join("spectrum_summary.csv");
    assert!((csv_value(&summary, "snr_squeezed", "predicted") - 1.208).abs() < 2e-3);
    let imp = csv_value(&summary, "improvement", "predicted");
    assert!((imp - 1.776).abs() < 2e-3);
    let text = std::fs::read_to_string(dir.path().join("spectrum_squeezed.csv")).unwrap();
    assert!(text.starts_with("frequency_hz,power_db\n"));

    let narrow = tempfile::tempdir().unwrap();
    assert!(run("spectrum", &["signal.rbw=1e4", "signal.span=2e5"], narrow.path()).status.success());
    let other = csv_value(&narrow.path().join("spectrum_summary.csv"), "improvement", "predicted");
    assert!((imp - other).abs() < 1e-6);
}

#[test]
fn zero_displacement_has_zero_snr() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("spectrum", &["signal.displacement_amplitude=0"], dir.path()).status.success());
    let s = dir.path().join("spectrum_summary.csv");
    assert_eq!(csv_value(&s, "snr_coherent", "predicted"), 0.0);
    assert_eq!(csv_value(&s, "snr_squeezed", "predicted"), 0.0);
}

#[test]
fn unsolvable_operating_point_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", &["operating_point.reference_displacement=0"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_2_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("noise", &["chain.quantum_efficiency=1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("paper.scenario:") && err.contains("quantum_efficiency"), "{err}");

    let bad = dir.path().join("bad.scenario");
    std::fs::write(&bad, "[beam]\nw0 = 1e-4\n\n[source\n").unwrap();
    let o = splitbeam(&["noise", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.scenario:4:"));

    let o = splitbeam(&["noise", "--config", "/nonexistent/x.scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn injected_mask_fault_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("validate", &["validate.inject=negative_mask_weight", "validate.mc_samples=20000"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mask_physicality"), "{err}");
    let csv = std::fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("mask_physicality,") && l.ends_with("FAIL")));
}

#[test]
fn verdicts_do_not_depend_on_seed() {
    let verdicts = |seed: u32| {
        let dir = tempfile::tempdir().unwrap();
        let s = seed.to_string();
        let o = splitbeam(
            &["validate", "--config", SCENARIO, "--seed", &s],
            dir.path(),
        );
        assert!(o.status.success(), "seed {seed}: {}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(dir.path().join("validate.csv")).unwrap();
        csv.lines().map(|l| l.rsplit(',').next().unwrap().to_string()).collect::<Vec<_>>()
    };
    let first = verdicts(1);
    for seed in 2..=20 {
        assert_eq!(verdicts(seed), first);
    }
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(run("spectrum", &[], d.path()).status.success());
        assert!(run("noise", &[], d.path()).status.success());
    }
    for f in ["spectrum_coherent.csv", "spectrum_squeezed.csv", "spectrum_summary.csv", "noise_traces.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    assert!(splitbeam(&["spectrum", "--config", SCENARIO, "--seed", "99"], c.path()).status.success());
    assert_ne!(
        std::fs::read(a.path().join("spectrum_squeezed.csv")).unwrap(),
        std::fs::read(c.path().join("spectrum_squeezed.csv")).unwrap()
    );
}
