use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn rpm3(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpm3"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn metrics(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = rpm3(&["run", scenario("single_cluster.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(&dir.path().join("single_cluster_metrics.json"));
    assert_eq!(m["verified"], true);
    assert_eq!(m["metrics"]["responses"], 3);
    assert_eq!(
        (m["metrics"]["rho_num"].as_u64(), m["metrics"]["rho_den"].as_u64()),
        (Some(1), Some(3))
    );
    let csv = fs::read_to_string(dir.path().join("single_cluster_metrics.csv")).unwrap();
    assert!(csv.starts_with("scenario,seed,n,z,m,k,c,N,epsilon,rho,rho_predicted,rho_I,sim_time\n"));
    assert_eq!(csv.lines().count(), 2);
    assert!(!dir.path().join("single_cluster_trace.jsonl").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("1/3"));
}

#[test]
fn trace_and_multiple_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("heterogeneous.json");
    let o = rpm3(&["run", path.to_str().unwrap(), "--seeds", "3", "--trace"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // consecutive seeds start at the scenario's own seed, 7
    for s in 7..10 {
        assert!(dir.path().join(format!("heterogeneous_seed{s}_metrics.json")).exists());
        let trace = fs::read_to_string(dir.path().join(format!("heterogeneous_seed{s}_trace.jsonl"))).unwrap();
        assert!(trace.lines().count() > 0);
        for line in trace.lines() {
            serde_json::from_str::<Value>(line).unwrap();
        }
    }
    let csv = fs::read_to_string(dir.path().join("heterogeneous_metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("single_cluster.json")).unwrap()).unwrap();
    v["z"] = 3.into();
    fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(code(&rpm3(&["run", bad.to_str().unwrap()], dir.path())), 2);

    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&rpm3(&["run", bad.to_str().unwrap()], dir.path())), 2);

    v["z"] = 1.into();
    v["q"] = 2147483646u64.into();
    fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(code(&rpm3(&["run", bad.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn audits_pass_and_sabotage_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["audit_z1", "audit_z2"] {
        let path = scenario(&format!("{name}.json"));
        let o = rpm3(&["audit", path.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let report = metrics(&dir.path().join(format!("{name}_audit.json")));
        assert_eq!(report["uniformity"]["tv_num"], 0);
        assert_eq!(report["recovery"]["failures"], 0);
        assert_eq!(code(&rpm3(&["audit", path.to_str().unwrap(), "--leak"], dir.path())), 4);
    }
}

#[test]
fn gamma_sweep_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = rpm3(&["sweep", scenario("sweep_gamma.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep_gamma_sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let n: f64 = row[col("N")].parse().unwrap();
        let mk: f64 = row[col("m")].parse::<f64>().unwrap() * row[col("k")].parse::<f64>().unwrap();
        let predicted: f64 = row[col("rho_predicted")].parse().unwrap();
        assert_eq!(mk / n, predicted, "{:?}", row);
    }
}

#[test]
fn rate_drops_with_collusion_on_average() {
    let dir = tempfile::tempdir().unwrap();
    let o = rpm3(
        &["sweep", scenario("sweep_z.json").to_str().unwrap(), "--seeds", "30"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep_z_sweep.csv")).unwrap();
    let mut sums = [0.0f64; 4];
    let mut counts = [0usize; 4];
    for row in reader.deserialize::<std::collections::HashMap<String, String>>() {
        let row = row.unwrap();
        let z: usize = row["z"].parse().unwrap();
        sums[z] += row["rho"].parse::<f64>().unwrap();
        counts[z] += 1;
    }
    assert_eq!(&counts[1..], &[30, 30, 30]);
    let mean: Vec<f64> = (1..4).map(|z| sums[z] / counts[z] as f64).collect();
    assert!(mean[0] > mean[1] && mean[1] > mean[2], "{mean:?}");
}

#[test]
fn sweep_over_cap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    let v = serde_json::json!({
        "name": "big",
        "base_path": scenario("single_cluster.json"),
        "grid": {"/seed": [0, 1, 2, 3]},
        "max_runs": 7
    });
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(
        code(&rpm3(&["sweep", path.to_str().unwrap(), "--seeds", "2"], dir.path())),
        2
    );
    assert_eq!(
        code(&rpm3(&["sweep", path.to_str().unwrap(), "--seeds", "1"], dir.path())),
        0
    );
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rpm3(&["run", dir.path().join("nope.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
}
