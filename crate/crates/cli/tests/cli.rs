use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn levymaps(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_levymaps")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let o = levymaps(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn pipeline(out: &Path) {
    let o = out.to_str().unwrap();
    ok(&["sample", "--out", o, "--seed", "11", "--n", "1024", "--alpha", "1.5", "--replicas", "2", "--ndjson"]);
    ok(&["build", "--out", o]);
    ok(&["dimension", "--out", o, "--sample-points", "128", "--centers", "4"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (ta, tb) = (tree_bytes(a.path()), tree_bytes(b.path()));
    assert!(ta.len() > 20);
    assert_eq!(ta, tb);
}

#[test]
fn sampled_excursion_is_valid_and_streams_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    ok(&["sample", "--out", o, "--seed", "2", "--n", "1024", "--alpha", "1.5", "--theta", "0", "--replicas", "4"]);
    let m = json(&dir.path().join("manifest.json"));
    let reps = m["stages"]["sample"]["replicas"].as_array().unwrap();
    assert_eq!(reps.len(), 4);
    let mut streams: Vec<u64> = reps.iter().map(|r| r["stream"].as_u64().unwrap()).collect();
    streams.dedup();
    assert_eq!(streams.len(), 4);

    let bytes = std::fs::read(dir.path().join("replica_0000/path.luka")).unwrap();
    assert_eq!(&bytes[..4], b"LUKA");
    assert_eq!(bytes[5], 1, "excursion kind");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1024);
    let inc: Vec<i32> = bytes[16..].chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect();
    assert_eq!(inc.len(), 1025);
    let mut w = 0i64;
    for (i, &x) in inc.iter().enumerate() {
        assert!(x >= -1);
        w += x as i64;
        assert!(w >= 0 || i == 1024);
    }
    assert_eq!(w, -1);
}

#[test]
fn single_edge_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    ok(&["sample", "--out", o, "--n", "1"]);
    ok(&["build", "--out", o]);
    let csv = std::fs::read_to_string(dir.path().join("replica_0000/map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let meta = json(&dir.path().join("replica_0000/map.json"));
    assert_eq!((meta["vertices"].as_u64(), meta["edges"].as_u64(), meta["faces"].as_u64()), (Some(2), Some(1), Some(1)));
}

#[test]
fn plus_minus_one_gives_quadrangulations() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    ok(&["sample", "--out", o, "--n", "500", "--family", "plus-minus-one", "--replicas", "2"]);
    ok(&["build", "--out", o]);
    for i in 0..2 {
        let a = json(&dir.path().join(format!("replica_{i:04}/audit.json")));
        assert_eq!(a["quadrangulation"], Value::Bool(true));
        assert_eq!(a["faces_are_twice_cycles"], Value::Bool(true));
    }
}

#[test]
fn dimension_report_schema_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let s = json(&dir.path().join("estimates.json"));
    for k in ["looptree_dim", "map_dim", "holder_looptree", "holder_map"] {
        assert!(s[k]["count"].as_u64().unwrap() >= 1, "{k}");
    }
    let svg = std::fs::read_to_string(dir.path().join("replica_0000/cover_map.svg")).unwrap();
    assert!(svg.contains(">log(1/eps)<") && svg.contains(">log N<"));
}

#[test]
fn segment_fixture_has_dimension_one() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["dimension", "--fixture", "segment", "--out", dir.path().to_str().unwrap()]);
    let e = json(&dir.path().join("estimates.json"));
    let slope = e["graph_cover"]["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn spine_check_writes_report_and_marks() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spine-check", "--out", dir.path().to_str().unwrap(), "--seed", "4", "--marksets", "20000"]);
    let r = json(&dir.path().join("spine_check.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    let marks = std::fs::read_to_string(dir.path().join("marks.csv")).unwrap();
    assert!(marks.starts_with("t,x,u\n"));
}

#[test]
fn experiment_writes_one_row_per_replica() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    ok(&["experiment", "--out", o, "--n", "2048", "--theta=-1,0", "--replicas", "2", "--sample-points", "64", "--centers", "2"]);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["runs"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("theta_-1/replica_0001/estimates.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let code = |args: &[&str]| levymaps(args).status.code();
    assert_eq!(code(&["sample", "--out", o, "--n", "0"]), Some(2));
    assert_eq!(code(&["sample", "--out", o, "--n", "10", "--family", "explicit", "--alpha", "1.5"]), Some(3));
    assert_eq!(code(&["sample", "--out", o, "--n", "1", "--family", "plus-minus-one"]), Some(3));
    ok(&["sample", "--out", o, "--n", "256"]);
    ok(&["build", "--out", o]);
    assert_eq!(code(&["dimension", "--out", o, "--sample-points", "64", "--budget", "10"]), Some(4));
    assert_eq!(code(&["dimension", "--out", o, "--sample-points", "1000"]), Some(2));
}
