use std::fs;
use std::process::Command;

fn hgpart(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hgpart")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hgpart(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn partition_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("h.hgr");
    fs::write(&input, "3 6\n1 2 3\n3 4\n4 5 6\n").unwrap();
    let part = dir.path().join("h.part");
    let stdout = ok(&["partition", "-k", "2", "-e", "0.03", "--seed", "7", "--preset", "deterministic", "-o", part.to_str().unwrap(), input.to_str().unwrap()]);
    assert!(stdout.contains("km1=1"), "{stdout}");
    assert_eq!(fs::read_to_string(&part).unwrap().lines().count(), 6);
    let report = ok(&["evaluate", input.to_str().unwrap(), part.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["km1"], 1);
    assert_eq!(v["soed"], 2);
    assert_eq!(v["balanced"], true);
}

#[test]
fn metis_input_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.graph");
    fs::write(&graph, "4 3\n2\n1 3\n2 4\n3\n").unwrap();
    let part = dir.path().join("g.part");
    let stdout = ok(&["partition", "-k", "2", "--format", "metis", "-o", part.to_str().unwrap(), graph.to_str().unwrap()]);
    assert!(stdout.contains("cut=1"), "{stdout}");
    let bad = dir.path().join("bad.hgr");
    fs::write(&bad, "2 4\n1 2\n1 9\n").unwrap();
    let out = hgpart(&["partition", "-k", "2", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bench_profile_effectiveness() {
    let dir = tempfile::tempdir().unwrap();
    let nets: String = (1..12).map(|i| format!("{} {}\n", i, i + 1)).collect();
    fs::write(dir.path().join("path.hgr"), format!("11 12\n{nets}")).unwrap();
    fs::write(dir.path().join("star.hgr"), "4 5\n1 2\n1 3\n1 4\n1 5\n").unwrap();
    let list = dir.path().join("instances.txt");
    fs::write(&list, "path.hgr\nstar.hgr\n").unwrap();
    let csv = dir.path().join("results.csv");
    ok(&["bench", "--instances", list.to_str().unwrap(), "-k", "2", "--seeds", "0,1", "--presets", "default,deterministic", "-o", csv.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 8);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["records"], 8);
    assert_eq!(manifest["timing_tainted"], false);
    let profile = ok(&["profile", csv.to_str().unwrap(), "--taus", "1,2"]);
    assert!(profile.starts_with("algorithm,tau,fraction\n"));
    assert!(profile.contains("default,1,"));
    let eff = ok(&["effectiveness", csv.to_str().unwrap(), "--a", "default", "--b", "deterministic"]);
    assert!(eff.contains("deterministic,1,"));
}
