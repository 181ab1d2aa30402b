use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use floquet_dress::commands::write_dataset;
use floquet_dress::config::{RunConfig, PRESETS};
use floquet_dress::fitting::synthetic_dataset;
use floquet_dress::spectroscopy::{scan_resonances, Branch};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet-dress")).args(args).output().unwrap()
}

fn preset_json(name: &str) -> Value {
    let text = PRESETS.iter().find(|(n, _)| *n == name).unwrap().1;
    serde_json::from_str(text).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run_ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Status and cells of the last metrics footer row.
fn metrics(csv: &str) -> (String, Vec<String>) {
    let footer: Vec<&str> = csv.lines().filter(|l| l.starts_with("# ")).collect();
    let last = footer.last().unwrap().trim_start_matches("# ");
    let cells: Vec<String> = last.split(',').map(str::to_string).collect();
    (cells.last().unwrap().clone(), cells)
}

#[test]
fn potential_barrier_converges_under_grid_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("paper_fig1b");
    let coarse = write_config(dir.path(), "coarse.json", &v);
    v["potential"]["line"]["points"] = Value::from(241);
    let fine = write_config(dir.path(), "fine.json", &v);
    let mut barriers = Vec::new();
    for (cfg, out) in [(&coarse, "c"), (&fine, "f")] {
        let out = dir.path().join(out);
        run_ok(&["potential", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        let csv = std::fs::read_to_string(out.join("potential.csv")).unwrap();
        let (status, cells) = metrics(&csv);
        assert_eq!(status, "ok");
        barriers.push((cells[3].parse::<f64>().unwrap(), cells[4].parse::<f64>().unwrap()));
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(barriers[0].0, barriers[1].0) < 1e-3, "{barriers:?}");
    assert!(rel(barriers[0].1, barriers[1].1) < 1e-3, "{barriers:?}");
}

#[test]
fn zero_rf_gives_identical_full_and_rwa_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("paper_fig1b");
    v["rf"]["current_a_ma"] = Value::from(0);
    v["rf"]["current_b_ma"] = Value::from(0);
    let cfg = write_config(dir.path(), "zero.json", &v);
    let out = dir.path().join("o");
    run_ok(&["potential", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("potential.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 121);
    for r in &rows {
        assert_eq!(r[1], r[2], "{r:?}");
    }
    // A bare Zeeman potential has one well: the metrics row says so.
    assert_eq!(metrics(&csv).0, "topology");
}

#[test]
fn levels_interleave_at_full_current_and_are_equally_spaced_without_rf() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l");
    run_ok(&["levels", "--preset", "paper_fig1b", "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("levels.csv")).unwrap();
    let rows = data_rows(&csv);
    let at = |kappa: &str| -> Vec<f64> {
        rows.iter().filter(|r| r[0] == "0" && r[1] == kappa).map(|r| r[3].parse().unwrap()).collect()
    };
    let (k0, k1) = (at("0"), at("1"));
    assert_eq!(k0.len(), 5);
    let top0 = k0.iter().copied().fold(f64::MIN, f64::max);
    let bottom1 = k1.iter().copied().fold(f64::MAX, f64::min);
    assert!(top0 > bottom1, "manifolds do not overlap: {top0} vs {bottom1}");

    let mut v = preset_json("paper_fig1b");
    v["rf"]["current_a_ma"] = Value::from(0);
    v["rf"]["current_b_ma"] = Value::from(0);
    let cfg = write_config(dir.path(), "zero.json", &v);
    let out = dir.path().join("z");
    run_ok(&["levels", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let rows = data_rows(&std::fs::read_to_string(out.join("levels.csv")).unwrap());
    for kappa in ["-1", "0", "1"] {
        let mut e: Vec<f64> =
            rows.iter().filter(|r| r[0] == "1" && r[1] == kappa).map(|r| r[3].parse().unwrap()).collect();
        e.sort_by(|a, b| a.total_cmp(b));
        let d: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(d.len(), 4);
        for x in &d {
            assert!((x - d[0]).abs() < 1e-6 * d[0], "{d:?}");
        }
    }
}

#[test]
fn empty_scan_range_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("paper_fig4");
    v["scan"]["currents_ma"] = Value::Array(vec![]);
    let cfg = write_config(dir.path(), "empty.json", &v);
    let out = dir.path().join("s");
    run_ok(&["scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("scan.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("# config_sha256="));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1);
    assert!(data_rows(&csv).is_empty());
}

/// A half turn about the vertical axis swaps the two RF wires, so it maps
/// the relative phase δ to −δ and reverses the static field. δ → −δ alone
/// reverses the RF helicity relative to the static field and is not a
/// symmetry.
#[test]
fn resonance_map_is_symmetric_under_half_turn() {
    let lines = |phase_deg: f64, ioffe_z: f64| -> Vec<Vec<f64>> {
        let mut v = preset_json("paper_fig4");
        v["rf"]["phase_deg"] = Value::from(phase_deg);
        v["static"]["ioffe_axis"] = serde_json::json!([0, 0, ioffe_z]);
        v["scan"]["currents_ma"] = serde_json::json!([20, 50]);
        let cfg = RunConfig::from_json(&v.to_string()).unwrap().normalize().unwrap();
        let map = scan_resonances(&cfg.setup().unwrap(), &cfg.scan_spec().unwrap()).unwrap();
        map.points.iter().map(|p| p.outcome.as_ref().unwrap().lines.iter().map(|l| l.frequency).collect()).collect()
    };
    let (a, b) = (lines(120.0, 1.0), lines(-120.0, -1.0));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.len(), y.len());
        for (f, g) in x.iter().zip(y) {
            assert!((f - g).abs() < 1.0, "{f} vs {g}");
        }
    }
    let c = lines(-120.0, 1.0);
    assert!((a[1][0] - c[1][0]).abs() > 1e3, "helicity should matter: {} vs {}", a[1][0], c[1][0]);
}

#[test]
fn fit_recovers_scale_and_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::preset("paper_fig4").unwrap().normalize().unwrap();
    let (problem, options, _) = cfg.fit_problem().unwrap();
    let data = synthetic_dataset(
        &problem,
        &[1.06],
        &[20e-3, 40e-3, 60e-3],
        &[(0, Branch::Plus), (1, Branch::Minus), (1, Branch::Plus)],
        1e3,
        &options,
    )
    .unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&data, &cfg.hash()).write(&path).unwrap();
    let out = dir.path().join("f");
    run_ok(&["fit", "--preset", "paper_fig4", "--data", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report = std::fs::read_to_string(out.join("fit_report.csv")).unwrap();
    let params = report.lines().find_map(|l| l.strip_prefix("# params=")).unwrap();
    assert!((params.parse::<f64>().unwrap() - 1.06).abs() < 1e-6, "{params}");
    assert!(report.contains("# converged=true"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "I_RF_mA,nu_kHz,sigma_kHz,branch\n20,250,1,0+\n30,abc,1,1-\n").unwrap();
    let o = bin(&["fit", "--preset", "paper_fig4", "--data", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    let msg = err["message"].as_str().unwrap();
    assert!(msg.contains("row 2") && msg.contains("nu_kHz"), "{msg}");

    std::fs::write(&bad, "I_RF_mA,nu_kHz,sigma_kHz,branch\n20,250,1,2*\n").unwrap();
    let o = bin(&["fit", "--preset", "paper_fig4", "--data", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("`branch`"));
}

#[test]
fn config_errors_exit_with_code_two_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("paper_fig1b");
    v["solver"]["dn_max"] = Value::from(-3);
    let cfg = write_config(dir.path(), "bad.json", &v);
    let o = bin(&["potential", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
    let o = bin(&["potential", "--preset", "no_such_preset"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["levels"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_empty_run_and_mutation() {
    let o = bin(&["selftest", "--cases", "0"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().all(|l| l.ends_with("no cases")), "{text}");

    let o = bin(&["selftest", "--cases", "12", "--flip-counter-rotating"]);
    assert_eq!(o.status.code(), Some(3));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("oracle equivalence: FAIL"), "{text}");
}

#[test]
fn overrides_enter_the_recorded_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["potential", "--preset", "paper_fig1b", "--out", a.to_str().unwrap()]);
    run_ok(&["potential", "--preset", "paper_fig1b", "--dn-max", "14", "--out", b.to_str().unwrap()]);
    let first = |p: &Path| std::fs::read_to_string(p.join("potential.csv")).unwrap().lines().next().unwrap().to_string();
    assert_ne!(first(&a), first(&b));
}
