use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn inzsmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inzsmf"))
        .args(args)
        .env_remove("INZSMF_STEPS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

/// Rows with the named timing column removed.
fn without(path: &Path, column: &str) -> Vec<Vec<String>> {
    let (header, rows) = read_csv(path);
    let idx = header.iter().position(|h| h == column).unwrap();
    rows.into_iter()
        .map(|mut r| {
            r.remove(idx);
            r
        })
        .collect()
}

#[test]
fn zero_steps_is_rejected_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = inzsmf(&["run", "--steps", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
    assert!(!dir.path().join("metrics.csv").exists());
}

#[test]
fn unknown_filter_is_an_argument_error() {
    let o = inzsmf(&["compare", "--filter", "ekf"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--filter"), "{}", stderr(&o));
}

#[test]
fn bad_reduction_order_names_the_field() {
    let o = inzsmf(&["run", "--reduction-order", "2", "--steps", "5", "--out", "/nonexistent/never"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("reduction_order"), "{}", stderr(&o));
}

#[test]
fn same_seed_gives_identical_outputs_apart_from_timing() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = inzsmf(&[
            "run", "--preset", "table1-row6", "--seed", "42", "--steps", "150", "--reps", "2", "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for rep in 0..2 {
        let name = format!("table1-row6_inzsmf_fradius_rep{rep}.csv");
        let (pa, pb) = (a.path().join(&name), b.path().join(&name));
        assert_eq!(without(&pa, "step_time_s"), without(&pb, "step_time_s"));
        assert_eq!(read_csv(&pa).1.len(), 150);
    }
    assert_eq!(
        without(&a.path().join("metrics.csv"), "art_seconds"),
        without(&b.path().join("metrics.csv"), "art_seconds")
    );
    assert_eq!(
        fs::read(a.path().join("metadata.json")).unwrap(),
        fs::read(b.path().join("metadata.json")).unwrap()
    );
}

#[test]
fn run_writes_one_metrics_row_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = inzsmf(&[
        "run", "--preset", "table1-row6", "--filter", "inzsmf", "--gain", "fradius", "--steps", "120", "--reps",
        "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("metrics.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..3], ["table1-row6", "inzsmf", "fradius"]);
    let rmse = header.iter().position(|h| h == "rmse_theta").unwrap();
    assert!(rows[0][rmse].parse::<f64>().unwrap() > 0.0);

    let (header, rows) = read_csv(&dir.path().join("table1-row6_inzsmf_fradius_rep0.csv"));
    assert_eq!(header.len(), 15);
    assert_eq!(header[0], "step");
    assert_eq!(header[14], "step_time_s");
    for row in &rows {
        for cell in &row[1..13] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), *cell);
        }
        assert!(row[13] == "true" || row[13] == "false");
        let (lo, hi): (f64, f64) = (row[9].parse().unwrap(), row[10].parse().unwrap());
        assert!(lo <= hi);
    }

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["configs"][0]["reduction_order"], 30);
    assert_eq!(meta["configs"][0]["h0"][1], 5.2);
}

#[test]
fn compare_shares_noise_and_reports_improvements() {
    let dir = tempfile::tempdir().unwrap();
    let o = inzsmf(&[
        "compare", "--preset", "table2", "--steps", "200", "--reps", "2", "--no-logs", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("comparison.csv"));
    assert!(header.iter().any(|h| h == "aar_x_improvement_pct"));
    let gains: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(gains, ["poles", "fradius"]);
    assert_eq!(read_csv(&dir.path().join("metrics.csv")).1.len(), 4);
    assert!(!dir.path().join("table2_zsmf_poles_rep0.csv").exists());

    let dir = tempfile::tempdir().unwrap();
    let o = inzsmf(&[
        "compare", "--preset", "table1-row3", "--steps", "100", "--reps", "1", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let truth = |f: &str| -> Vec<Vec<String>> {
        read_csv(&dir.path().join(f)).1.into_iter().map(|r| r[..4].to_vec()).collect()
    };
    assert_eq!(
        truth("table1-row3_zsmf_fradius_rep0.csv"),
        truth("table1-row3_inzsmf_fradius_rep0.csv")
    );
}

#[test]
fn config_file_and_environment_layer_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# experiment\npreset = table2\nsteps = 40\nreduction-order = 12\nfilter = zsmf\n").unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_inzsmf"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--reps", "1", "--out", out.to_str().unwrap()])
        .env("INZSMF_STEPS", "30")
        .env("INZSMF_SEED", "7")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("metrics.csv"));
    let get = |k: &str| rows[0][header.iter().position(|h| h == k).unwrap()].clone();
    assert_eq!(get("config"), "table2");
    assert_eq!(get("filter"), "zsmf");
    assert_eq!(get("gain"), "poles");
    assert_eq!(get("steps"), "30");
    assert_eq!(get("seed"), "7");
    assert_eq!(get("reduction_order"), "12");

    fs::write(&cfg, "steps = many\n").unwrap();
    let o = inzsmf(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("`steps`"), "{}", stderr(&o));
}

#[test]
fn selftest_passes() {
    let o = inzsmf(&["selftest"]);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
}
