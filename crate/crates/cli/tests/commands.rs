use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trrip_core::experiment::ExperimentConfig;
use trrip_core::{classify, ProfiledBlock, Temperature, TemperatureMap, ThresholdParams};

fn trrip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trrip"))
        .args(args)
        .current_dir(dir)
        .env_remove("TRRIP_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A quick trace: the canonical shape over 64 sets.
fn small_pattern(dir: &Path) -> String {
    let mut spec = trrip_core::trace::PatternSpec::canonical_mixed(2);
    spec.set_count = 64;
    spec.iterations = 20;
    let path = dir.join("pattern.json");
    fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

const PROFILE: &str = "# id,size,count\nmain,256,900000\nloop,128,99000\nerr,512,1000\ninit,1024,0\n";

#[test]
fn classify_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), PROFILE).unwrap();
    let o = trrip(dir.path(), &["classify", "--profile", "p.csv", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let map = TemperatureMap::from_json(&fs::read_to_string(dir.path().join("c/map.json")).unwrap()).unwrap();
    let layout: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c/layout.json")).unwrap()).unwrap();

    let blocks = vec![
        ProfiledBlock::new("main", 256, 900_000),
        ProfiledBlock::new("loop", 128, 99_000),
        ProfiledBlock::new("err", 512, 1_000),
        ProfiledBlock::new("init", 1024, 0),
    ];
    let temps = classify(&blocks, &ThresholdParams::default()).unwrap();
    let listed: Vec<String> = layout["temperatures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e[1].as_str().unwrap().to_string())
        .collect();
    assert_eq!(listed, temps.iter().map(|t| t.name().to_string()).collect::<Vec<_>>());
    assert_eq!(map.count(Temperature::Hot), 1);
    assert_eq!(map.count(Temperature::Warm), 1);
    assert!(fs::read_to_string(dir.path().join("c/layout.txt")).unwrap().contains("hot"));
}

#[test]
fn percentile_one_makes_executed_code_hot() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), PROFILE).unwrap();
    let o = trrip(
        dir.path(),
        &["classify", "--profile", "p.csv", "--percentile-hot", "1.0", "--out", "c"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let layout: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c/layout.json")).unwrap()).unwrap();
    let temps: Vec<&str> = layout["temperatures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e[1].as_str().unwrap())
        .collect();
    assert_eq!(temps, ["hot", "hot", "hot", "cold"]);
}

#[test]
fn missing_profile_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = trrip(dir.path(), &["classify", "--profile", "absent.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn unknown_policy_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = trrip(dir.path(), &["simulate", "--policy", "fifo"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["lru", "srrip", "trrip-1", "trrip-2", "emissary"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn malformed_trace_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), "I,0x0,0x0\nbogus\n").unwrap();
    let o = trrip(dir.path(), &["simulate", "--trace", "t.txt", "--trace-format", "text"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn simulate_is_deterministic_and_rerunnable() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = small_pattern(dir.path());
    for out in ["a", "b"] {
        let o = trrip(
            dir.path(),
            &["simulate", "--pattern", &pattern, "--policy", "lru", "--out", out],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["result.json", "result.csv", "coverage.csv", "summary.txt"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        assert!(a == fs::read(dir.path().join("b").join(name)).unwrap(), "{name} differs");
    }
    // rerun from the persisted config into the same directory
    let before = fs::read(dir.path().join("a/result.json")).unwrap();
    let o = trrip(dir.path(), &["simulate", "--config", "a/experiment.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read(dir.path().join("a/result.json")).unwrap() == before);
    let config = ExperimentConfig::load(&dir.path().join("a/experiment.json")).unwrap();
    assert_eq!(config.policy.name(), "lru");
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = small_pattern(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_trrip"))
        .args(["simulate", "--pattern", &pattern])
        .current_dir(dir.path())
        .env("TRRIP_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/result.json").is_file());
}

#[test]
fn gen_trace_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["g1", "g2"] {
        let o = trrip(dir.path(), &["gen-trace", "--seed", "7", "--sets", "64", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["trace.bin", "map.json", "pattern.json"] {
        let a = fs::read(dir.path().join("g1").join(name)).unwrap();
        assert!(a == fs::read(dir.path().join("g2").join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn generated_files_feed_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let o = trrip(dir.path(), &["gen-trace", "--sets", "64", "--iterations", "5", "--format", "text", "--out", "g"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = trrip(
        dir.path(),
        &["simulate", "--trace", "g/trace.txt", "--map", "g/map.json", "--out", "s"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("trrip-1"));
}

#[test]
fn compare_two_configs_and_reject_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = small_pattern(dir.path());
    for (policy, out) in [("srrip", "a"), ("trrip-1", "b")] {
        let o = trrip(dir.path(), &["simulate", "--pattern", &pattern, "--policy", policy, "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = trrip(dir.path(), &["compare", "a/experiment.json", "b/experiment.json", "--out", "cmp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    assert!(csv.contains("srrip") && csv.contains("trrip-1"), "{csv}");

    let o = trrip(dir.path(), &["simulate", "--policy", "lru", "--out", "c", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = trrip(dir.path(), &["compare", "a/experiment.json", "c/experiment.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn single_policy_compare_has_no_reductions() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = small_pattern(dir.path());
    let o = trrip(dir.path(), &["compare", "--pattern", &pattern, "--policies", "lru", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("c/compare.txt")).unwrap();
    assert!(!table.contains("reduction"), "{table}");
}

#[test]
fn associativity_sweep_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = small_pattern(dir.path());
    let o = trrip(
        dir.path(),
        &["sweep", "--pattern", &pattern, "--axis", "l2_associativity", "--values", "4,8,16", "--out", "s"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(dir.path().join("s/sweep.json").is_file());
}

#[test]
fn reuse_peaks_at_the_generator_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = trrip(dir.path(), &["reuse", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("r/reuse.csv")).unwrap();
    let base: Vec<(String, f64)> = csv
        .lines()
        .filter(|l| l.starts_with("base,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[3].parse().unwrap())
        })
        .collect();
    let top = base.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(top.0, "9-12");
}
