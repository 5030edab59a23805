use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn meadsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meadsr")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("test.conf");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_trace_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_end = 60\n");
    let out = dir.path().join("out");
    let o = meadsr(&["run", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let summary = String::from_utf8(o.stdout).unwrap();
    for line in [
        "packet delivery fraction",
        "normalized routing overhead",
        "average end to end delay",
        "energy consumed per packet",
        "deviation",
        "minimal residual energy",
    ] {
        assert!(summary.contains(line), "missing `{line}` in\n{summary}");
    }
    assert!(out.join("MEA-DSR-seed1.tr").exists());
    assert!(out.join("seed1.mobility").exists());
    assert!(out.join("seed1.connections").exists());

    let csv = fs::read_to_string(out.join("MEA-DSR-seed1.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let td: f64 = row[headers.iter().position(|h| h == "td").unwrap()].parse().unwrap();
    assert!((0.0..=1.0).contains(&td));
}

#[test]
fn protocols_share_scenario_files_and_trace_can_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_end = 30\npause = 0\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(meadsr(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let o = meadsr(&["run", "--config", &cfg, "--protocol", "DSR", "--trace", "off", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    for f in ["seed1.mobility", "seed1.connections"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(b.join("DSR-seed1.csv").exists());
    assert!(!b.join("DSR-seed1.tr").exists());
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "speed_min = 30\nspeed_max = 20\n");
    let o = meadsr(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));

    let o = meadsr(&["run", "--config", "/nonexistent/test.conf"]);
    assert!(!o.status.success());
}

#[test]
fn sweep_into_unwritable_dir_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_end = 10\n");
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = meadsr(&["sweep", "--config", &cfg, "--axis", "wt", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot create"));
}

#[test]
fn sweep_rows_and_means() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim_end = 40\npause = 0\nn_nodes = 20\narea_width = 600\narea_height = 600\n");
    let out = dir.path().join("sweep");
    let o = meadsr(&[
        "sweep", "--config", &cfg, "--axis", "rate", "--points", "2,6", "--seeds", "1,2,3", "--jobs", "2", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(out.join("rate.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","),
        "axis_value,protocol,seed,srn,td,dm,ecp,etecn,term,data_sent,data_received,routing_packets,drop_ifq,drop_nrte,drop_tout,drop_ttl"
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * 3 + 2 * 2);

    // Every mean row is the column mean of the three seed rows before it.
    for group in rows.chunks(4) {
        assert_eq!(&group[3][2], "mean");
        for col in 3..16 {
            let vals: Vec<f64> = group[..3].iter().filter_map(|r| r[col].parse().ok()).collect();
            let want = vals.iter().sum::<f64>() / vals.len() as f64;
            let got: f64 = group[3][col].parse().unwrap();
            assert_eq!(got, want, "column {col} of {:?}", &group[3]);
        }
    }
}
