//! End-to-end runs of the `kse` binary: files, exit codes and determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn kse(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_kse")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_snapshots_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "problem = 2\nN = 64\nk = 0.25\nT = 2\nsnapshot_every = 1.0\n").unwrap();
    assert_eq!(kse(&["solve", "--config", cfg.to_str().unwrap(), "--out", out]), 0);
    for t in ["0", "1", "2"] {
        let text = fs::read_to_string(dir.path().join(format!("field_t{t}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u"));
        assert_eq!(lines.count(), 64);
    }
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.starts_with("t,h,k,N,T,"));
    assert_eq!(table.lines().count(), 4);
    let r = report(dir.path());
    assert_eq!(r["status"], "ok");
    assert_eq!(r["results"]["kind"], "solve");
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(r["problem"]["scheme"], "periodic");
}

#[test]
fn traveling_wave_table_reports_literature_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(kse(&["table", "--set", "preset=table2", "--out", out]), 0);
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].contains("sbsc_gre_lit"));
    assert!(rows[1].starts_with("6,") && rows[1].ends_with(",1.625E-07,6.509E-06,7.881E-06"));
}

#[test]
fn space_time_table_has_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(kse(&["table", "--set", "preset=table1", "--out", out]), 0);
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let first: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&first[..6], &["4", "0.025", "26", "2", "6.157E-03", "-"]);
    let last: Vec<&str> = table.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(&last[..6], &["0.5", "0.003125", "201", "2", "1.461E-06", "4.0359"]);
}

#[test]
fn stability_writes_one_pair_per_y() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(kse(&["stability", "--set", "preset=fig2", "--set", "resolution=[32, 32]", "--out", out]), 0);
    for y in ["-5i", "5i", "-20i", "20i"] {
        let samples = fs::read_to_string(dir.path().join(format!("stability_y{y}.csv"))).unwrap();
        assert!(samples.starts_with("re_x,im_x,abs_r\n"));
        assert_eq!(samples.lines().count(), 1 + 32 * 32);
        let boundary = fs::read_to_string(dir.path().join(format!("boundary_y{y}.csv"))).unwrap();
        assert!(boundary.starts_with("curve,re_x,im_x\n"));
        assert!(boundary.lines().count() > 1);
    }
    assert_eq!(report(dir.path())["results"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn reruns_without_timings_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "converge".to_string(),
            "--set".into(),
            "preset=table4".into(),
            "--set".into(),
            "timings=false".into(),
            "--out".into(),
            d.to_str().unwrap().to_string(),
        ]
    };
    for d in [a.path(), b.path()] {
        let args = args(d);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(kse(&args), 0);
    }
    for f in ["report.json", "table.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r = report(a.path());
    assert!(r["results"]["rows"][1]["timing"].is_null());
    assert_eq!(r["config"]["timings"], false);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(kse(&["solve", "--set", "problem=1", "--set", "colour=3", "--out", out]), 2);
    assert_eq!(kse(&["converge", "--set", "problem=2", "--set", "N=64", "--set", "k=[0.025, 0.01]", "--set", "T=1", "--out", out]), 2);
    assert_eq!(kse(&["stability", "--set", "preset=table1", "--out", out]), 2);
    assert_eq!(kse(&["solve", "--set", "problem=1", "--set", "h=3", "--set", "k=0.1", "--set", "T=1", "--out", out]), 2);
    assert_eq!(kse(&["solve", "--bogus"]), 2);
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(kse(&["solve", "--config", missing.to_str().unwrap()]), 4);
    let file = dir.path().join("plain");
    fs::write(&file, "").unwrap();
    let inside = file.join("out");
    assert_eq!(kse(&["stability", "--set", "y=-2", "--out", inside.to_str().unwrap()]), 4);
}

#[test]
fn blow_up_exits_3_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = kse(&[
        "solve", "--set", "problem=4", "--set", "beta=-1.1", "--set", "h=0.05", "--set", "k=0.001", "--set", "T=1",
        "--out", out,
    ]);
    assert_eq!(code, 3);
    let r = report(dir.path());
    assert_eq!(r["status"], "unstable");
    assert!(r["error"].as_str().unwrap().contains("non-finite"));
}
