use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

fn partsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partsim")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small synthetic run; `extra` is appended verbatim.
fn config(dir: &Path, horizon: f64, extra: &str) -> PathBuf {
    let text = format!(
        r#"schema_version = 1

[input]
pools = "{pools}"

[input.synthetic]
node_count = 200
as_count = 20
concentration_exponent = 1.24
seed = 3

[sim]
horizon = {horizon:?}
sample_interval = 600.0
seed = 9
{extra}"#,
        pools = fixtures().join("pools_sim.json").display(),
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn zero_horizon_writes_the_initial_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 0.0, "");
    let out = tmp.path().join("out");
    let o = partsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stderr.is_empty());
    let trace = std::fs::read_to_string(out.join("trace.jsonl")).unwrap();
    let samples: Vec<&str> = trace.lines().filter(|l| l.contains(r#""kind":"sample""#)).collect();
    assert_eq!(samples.len(), 1);
    assert!(samples[0].starts_with(r#"{"t":0.000000,"kind":"sample""#), "{}", samples[0]);
    assert!(out.join("report.json").exists());
}

#[test]
fn unknown_as_in_a_scenario_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = r#"
[[scenarios]]
label = "nowhere"
kind = "spatial"
as_set = [4200000001]
start = 0.0
duration = 60.0
"#;
    let cfg = config(tmp.path(), 600.0, scenario);
    let o = partsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4200000001"), "{}", stderr(&o));
}

#[test]
fn schema_mismatch_is_rejected_before_anything_else() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "schema_version = 2\nnot_a_field = true\n").unwrap();
    let o = partsim(&["simulate", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_version"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_are_named_with_their_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 600.0, "hoirzon = 5.0\n");
    let o = partsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hoirzon"), "{}", stderr(&o));
}

#[test]
fn snapshot_dir_without_nodes_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    std::fs::create_dir(&snaps).unwrap();
    std::fs::write(snaps.join("snap-1524700800.json"), r#"{"timestamp":1524700800,"nodes":[]}"#).unwrap();
    let o = partsim(&["census", "--snapshots", snaps.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
}

#[test]
fn census_of_the_bundled_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixtures();
    let out = tmp.path().join("census");
    let o = partsim(&[
        "census",
        "--snapshots",
        f.join("census").to_str().unwrap(),
        "--prefixes",
        f.join("prefixes.csv").to_str().unwrap(),
        "--aliases",
        f.join("org_aliases.csv").to_str().unwrap(),
        "--release-dates",
        f.join("release_dates.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stderr.is_empty());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let counts: Vec<(String, u64)> = report["covers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (format!("{}@{}", c["level"].as_str().unwrap(), c["target"]), c["count"].as_u64().unwrap()))
        .collect();
    assert!(counts.contains(&("as@0.3".into(), 8)), "{counts:?}");
    assert!(counts.contains(&("as@0.5".into(), 24)), "{counts:?}");
    assert!(counts.contains(&("org@0.5".into(), 13)), "{counts:?}");
}

#[test]
fn reruns_produce_identical_output_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = r#"
[[scenarios]]
label = "feed"
kind = "temporal"
victim_filter = "b1"
adversary_hash_share = 0.4
start = 1800.0
duration = 1800.0
"#;
    let cfg = config(tmp.path(), 7200.0, scenario);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = partsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stderr.is_empty());
        tree(&out)
    };
    let a = run("a");
    assert!(a.len() >= 3);
    assert_eq!(a, run("b"));
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = r#"
[[scenarios]]
label = "cut"
kind = "spatial"
as_set = [37963]
start = 600.0
duration = 1200.0

[sweep]
repetitions = 4

[[sweep.axes]]
field = "duration"
values = [600.0, 1200.0]
"#;
    let cfg = config(tmp.path(), 3600.0, scenario);
    let run = |jobs: &str| {
        let out = tmp.path().join(format!("j{jobs}"));
        let o = partsim(&["attack-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success(), "{}", stderr(&o));
        tree(&out)
    };
    let one = run("1");
    assert!(one.contains_key(Path::new("sweep.csv")));
    assert_eq!(one, run("3"));
}

#[test]
fn zero_jobs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = partsim(&["blockaware-eval", "--out", tmp.path().to_str().unwrap(), "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
