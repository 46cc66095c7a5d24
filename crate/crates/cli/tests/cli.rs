use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hoprepair"));
    c.env_remove("HOPREPAIR_Q");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn bound_json_golden() {
    assert_eq!(ok(&["bound", "--grid", "2", "3", "--k", "3", "--M", "6", "--failed", "5"]), golden("bound_grid2x3_node5.json"));
}

#[test]
fn bound_tandem_is_m() {
    assert_eq!(ok(&["bound", "--tandem", "6", "--k", "3", "--M", "3", "--failed", "3", "--format", "csv"]), golden("bound_tandem6.csv"));
    let v = json(&["bound", "--tandem", "6", "--k", "3", "--failed", "1"]);
    assert_eq!(v["lower_bound"], "3/1");
    assert_eq!(v["M"], 3);
}

#[test]
fn bound_corner_of_2x3_is_five() {
    let v = json(&["bound", "--grid", "2", "3", "--failed", "4"]);
    assert_eq!((v["k"].as_u64(), v["M"].as_u64(), v["lower_bound"].as_str()), (Some(3), Some(6), Some("5/1")));
}

#[test]
fn missing_failed_is_a_usage_error() {
    let o = run(&["bound", "--tandem", "6", "--k", "3", "--M", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--failed"));
    assert_eq!(run(&["bound", "--failed", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bound", "--tandem", "5", "--grid", "2", "3", "--failed", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn repair_json_golden() {
    assert_eq!(ok(&["repair", "--grid", "2", "3", "--engine", "grid2x3", "--failed", "6"]), golden("repair_grid2x3_node6.json"));
    assert_eq!(ok(&["repair", "--tandem", "6", "--k", "3", "--failed", "3"]), golden("repair_tandem6_node3.json"));
}

#[test]
fn repair_transcript_fields() {
    let v = json(&["repair", "--grid", "2", "3", "--engine", "grid2x3", "--failed", "6"]);
    assert_eq!(v["cost"], 5);
    assert_eq!(v["exact"], true);
    let hops: usize = v["steps"].as_array().unwrap().iter().map(|s| s["payload"].as_array().unwrap().len()).sum();
    assert_eq!(hops, 5);
    let v = json(&["repair", "--grid", "4", "4", "--engine", "subopt2", "--failed", "1"]);
    assert_eq!((v["cost"].as_u64(), v["exact"].as_bool(), v["causal"].as_bool()), (Some(14), Some(true), Some(true)));
    let v = json(&["repair", "--grid", "2", "4", "--engine", "subopt1", "--failed", "3"]);
    assert_eq!((v["code"].as_str(), v["cost"].as_u64()), (Some("striped"), Some(8)));
}

#[test]
fn repair_with_explicit_split() {
    let v = json(&["repair", "--tandem", "7", "--k", "3", "--failed", "4", "--split", "0,3"]);
    assert_eq!(v["cost"], 3);
    assert_eq!(v["exact"], true);
    let firsts: Vec<u64> = v["steps"].as_array().unwrap().iter().map(|s| s["from"].as_u64().unwrap()).collect();
    assert_eq!(firsts, vec![7, 6, 5]);
    assert_eq!(run(&["repair", "--tandem", "7", "--k", "3", "--failed", "1", "--split", "1,2"]).status.code(), Some(4));
}

#[test]
fn unsupported_combinations_have_their_own_exit_code() {
    let o = run(&["repair", "--grid", "4", "4", "--engine", "grid2x3", "--failed", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(run(&["repair", "--grid", "2", "3", "--engine", "grid2x3", "--failed", "2"]).status.code(), Some(3));
    assert_eq!(run(&["repair", "--grid", "2", "3", "--engine", "tandem", "--k", "3", "--failed", "2"]).status.code(), Some(3));
    // parity nodes are outside subopt2's reach
    assert_eq!(run(&["repair", "--grid", "2", "4", "--engine", "subopt2", "--failed", "8"]).status.code(), Some(3));
    assert_eq!(run(&["repair", "--grid", "2", "3", "--engine", "nope", "--failed", "2"]).status.code(), Some(2));
}

#[test]
fn invalid_parameters() {
    assert_eq!(run(&["repair", "--grid", "2", "3", "--failed", "9"]).status.code(), Some(4));
    assert_eq!(run(&["repair", "--grid", "3", "3", "--code", "grid-general", "--failed", "1"]).status.code(), Some(4));
    assert_eq!(run(&["repair", "--grid", "2", "3", "--alpha", "1,1,2", "--failed", "6"]).status.code(), Some(4));
    assert_eq!(run(&["bound", "--tandem", "4", "--k", "4", "--failed", "1"]).status.code(), Some(4));
}

#[test]
fn table_csv_golden() {
    assert_eq!(ok(&["table", "2", "2", "2", "3"]), golden("table_small.csv"));
    assert_eq!(ok(&["table", "2", "2", "--format", "json"]), golden("table_2x2.json"));
}

#[test]
fn table_rejects_odd_grids_with_a_warning() {
    let o = run(&["table", "3", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("warning: skipping 3x3"));
    let o = run(&["table", "3", "3", "2", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: skipping 3x3"));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert_eq!(run(&["table", "2"]).status.code(), Some(2));
}

#[test]
fn verify_exit_status() {
    let o = run(&["verify", "--tandem", "6", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["pass"].as_bool(), v["mds"]["subsets_checked"].as_u64()), (Some(true), Some(20)));

    // field too small for the code: rejected before any check runs
    let o = run(&["verify", "--tandem", "6", "--k", "3", "--q", "5"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).is_empty());

    let o = run(&["verify", "--grid", "2", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("node 5: cost 5/1 vs lower bound 22/5"), "{}", stderr(&o));

    let o = run(&["verify", "--grid", "2", "3", "--failed", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn verify_planted_defects() {
    let o = run(&["verify", "--grid", "2", "3", "--rho", "0,1,1"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["verify", "--grid", "2", "3", "--rho", "0,1,1", "--allow-degenerate", "--failed", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("node 4: repair failed: residual interference"), "{}", stderr(&o));
    let o = run(&["verify", "--grid", "2", "3", "--alpha", "1,6,2", "--failed", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MDS violated"), "{}", stderr(&o));
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "grid = [2, 3]\nfailed = 4\nengine = \"grid2x3\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&["repair", "--config", c]);
    assert_eq!((v["failed_node"].as_u64(), v["cost"].as_u64()), (Some(4), Some(5)));
    // flags win over the file
    let v = json(&["repair", "--config", c, "--failed", "6"]);
    assert_eq!(v["failed_node"], 6);
    let v = json(&["bound", "--config", c, "--tandem", "5", "--k", "2", "--failed", "3"]);
    assert_eq!(v["lower_bound"], "2/1");

    std::fs::write(&cfg, "grid = [2, 3]\nfialed = 4\n").unwrap();
    let o = run(&["bound", "--config", c]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("fialed"));
    assert_eq!(run(&["bound", "--config", dir.path().join("absent.toml").to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn edge_list_topology() {
    let dir = tempfile::tempdir().unwrap();
    // a 5-cycle
    std::fs::write(dir.path().join("ring.txt"), "# ring\n1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
    let cfg = dir.path().join("ring.toml");
    std::fs::write(&cfg, "edges = \"ring.txt\"\nk = 2\nfailed = 1\n").unwrap();
    let v = json(&["bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(v["topology"]["kind"], "custom");
    assert_eq!(v["lower_bound"], "2/1");
    let v = json(&["repair", "--config", cfg.to_str().unwrap(), "--engine", "subopt1"]);
    assert_eq!((v["cost"].as_u64(), v["exact"].as_bool(), v["causal"].as_bool()), (Some(2), Some(true), Some(true)));
    std::fs::write(dir.path().join("bad.txt"), "1 2\n3\n").unwrap();
    let p = dir.path().join("bad.txt");
    assert_eq!(run(&["bound", "--edges", p.to_str().unwrap(), "--k", "1", "--failed", "1"]).status.code(), Some(4));
}

#[test]
fn modulus_from_the_environment() {
    let o = bin().args(["verify", "--tandem", "6", "--k", "3"]).env("HOPREPAIR_Q", "5").output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    let o = bin().args(["repair", "--tandem", "6", "--k", "3", "--failed", "2"]).env("HOPREPAIR_Q", "11").output().unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["q"], 11);
    // the flag beats the environment, and so does a config file
    let o = bin().args(["repair", "--tandem", "6", "--k", "3", "--failed", "2", "--q", "13"]).env("HOPREPAIR_Q", "11").output().unwrap();
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap()["q"], 13);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.toml");
    std::fs::write(&cfg, "q = 17\n").unwrap();
    let o = bin()
        .args(["repair", "--tandem", "6", "--k", "3", "--failed", "2", "--config", cfg.to_str().unwrap()])
        .env("HOPREPAIR_Q", "11")
        .output()
        .unwrap();
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap()["q"], 17);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["verify", "--grid", "2", "4", "--jobs", "4"][..],
        &["table", "2", "2", "2", "4", "--jobs", "0"][..],
        &["bound", "--grid", "3", "4", "--failed", "6", "--jobs", "3"][..],
    ] {
        let a = run(args);
        let b = run(args);
        let serial = run(&args[..args.len() - 2]);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, serial.stdout, "{args:?}");
    }
}

#[test]
fn pretty_output() {
    let s = ok(&["repair", "--grid", "2", "3", "--failed", "5", "--format", "pretty"]);
    assert!(s.ends_with("cost 5, exact true, causal true\n"), "{s}");
    let s = ok(&["table", "2", "2", "--format", "pretty"]);
    assert_eq!(s.lines().count(), 2);
    assert_eq!(run(&["repair", "--grid", "2", "3", "--failed", "5", "--format", "csv"]).status.code(), Some(2));
}
