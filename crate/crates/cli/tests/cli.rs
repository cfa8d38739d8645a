use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn egl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_data_gives_all_zero_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = egl(dir.path(), &["simulate", "--initial", "zero", "--N", "16", "--dt", "0.1", "--out", "z"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("z/records.csv")).unwrap();
    assert!(csv.starts_with("# config-hash: "));
    assert!(csv.contains("t,energy,hs_norm,div_drift"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[1..].iter().all(|v| *v == 0.0)));
}

#[test]
fn taylor_green_run_stays_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = egl(dir.path(), &["simulate", "--N", "32", "--dt", "0.01", "--out", "tg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let drift: f64 = text
        .lines()
        .find(|l| l.starts_with("max div drift"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift < 1e-10, "{text}");
    let rows = data_rows(&fs::read_to_string(dir.path().join("tg/records.csv")).unwrap());
    let e0 = rows[0][1];
    assert!(rows.iter().all(|r| (r[1] - e0).abs() < 1e-12));

    let dump = egl(dir.path(), &["snapshot-dump", "tg/velocity.egl"]);
    assert_eq!(dump.status.code(), Some(0));
    assert!(stdout(&dump).contains("record 1: vector dim=2 N=32"));
    let dump = egl(dir.path(), &["snapshot-dump", "tg/vorticity.egl"]);
    assert!(stdout(&dump).contains("vorticity dim=2 N=32"));
}

#[test]
fn geodesic_mode_writes_flow_maps() {
    let dir = tempfile::tempdir().unwrap();
    let o = egl(
        dir.path(),
        &["simulate", "--mode", "geodesic", "--N", "16", "--dt", "0.1", "--T", "0.3", "--out", "g"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dump = egl(dir.path(), &["snapshot-dump", "g/flow.egl"]);
    assert!(stdout(&dump).contains("diffeo dim=2 N=16"));
    let rows = data_rows(&fs::read_to_string(dir.path().join("g/records.csv")).unwrap());
    assert!((rows.last().unwrap()[4] - 1.0).abs() < 1e-3);
}

#[test]
fn malformed_config_exits_with_code_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "[grid]\nn = sixty\n").unwrap();
    let o = egl(dir.path(), &["simulate", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n: cannot parse `sixty`"), "{}", stderr(&o));

    fs::write(dir.path().join("cut.cfg"), "[dynamics]\ncutoff = 0\n").unwrap();
    let o = egl(dir.path(), &["verify", "--config", "cut.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cutoff"));

    let o = egl(dir.path(), &["simulate", "--N", "15"]);
    assert_eq!(o.status.code(), Some(2));
    let o = egl(dir.path(), &["simulate", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("hot.cfg"), "[run]\namplitude = 200\n").unwrap();
    let o = egl(
        dir.path(),
        &["simulate", "--config", "hot.cfg", "--initial", "random", "--N", "16", "--dt", "0.5", "--T", "5"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn corrupt_snapshot_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.egl"), b"EGL1 but not really").unwrap();
    let o = egl(dir.path(), &["snapshot-dump", "junk.egl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("snapshot"));
}

#[test]
fn coarse_verify_uses_relaxed_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let o = egl(dir.path(), &["verify", "--N", "16", "--dt", "0.01", "--T", "0.5", "--samples", "5", "--out", "v"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("all "), "{text}");
    let table = fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    let vol = table.lines().find(|l| l.starts_with("volume_preservation")).unwrap();
    let tol: f64 = vol.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(tol, 1e-3);
}

#[test]
fn r_sweep_writes_one_series_per_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "[experiment]\nkind = composition\ncomposition_n = 256\n").unwrap();
    let o = egl(dir.path(), &["illposedness", "--config", "c.cfg", "--R", "0.05,0.1,0.2", "--kmax", "1", "--out", "ip"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for r in ["0.05", "0.1", "0.2"] {
        let csv = fs::read_to_string(dir.path().join(format!("ip/composition_R{r}.csv"))).unwrap();
        assert!(csv.contains("k,input_gap,output_gap"));
        assert_eq!(data_rows_loose(&csv), 1);
        let svg = fs::read_to_string(dir.path().join(format!("ip/composition_R{r}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

fn data_rows_loose(csv: &str) -> usize {
    csv.lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn truncation_is_a_warning_not_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = egl(
        dir.path(),
        &["illposedness", "--experiment", "solution_map", "--N", "32", "--dt", "0.05", "--R", "0.05", "--kmax", "3"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("truncated at k = 1"));
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["simulate", "--initial", "random", "--seed", "9", "--N", "16", "--dt", "0.05", "--T", "0.5", "--out", out]
    };
    assert_eq!(egl(dir.path(), &args("a")).status.code(), Some(0));
    assert_eq!(egl(dir.path(), &args("b")).status.code(), Some(0));
    let a = fs::read(dir.path().join("a/records.csv")).unwrap();
    let b = fs::read(dir.path().join("b/records.csv")).unwrap();
    // The output directory is part of the hashed config, so compare past the hash line.
    let body = |v: &[u8]| String::from_utf8_lossy(v).lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&a), body(&b));
    assert_eq!(fs::read(dir.path().join("a/velocity.egl")).unwrap(), fs::read(dir.path().join("b/velocity.egl")).unwrap());
    assert_eq!(egl(dir.path(), &args("a")).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("a/records.csv")).unwrap(), a);
}
