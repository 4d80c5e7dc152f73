use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lockthrash"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simulate_header_matches_golden() {
    let o = run(&["simulate", "--config", "c1", "--cores", "2", "--max-ticks", "20000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let golden = fs::read_to_string(fixture("run_record_header.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), golden.trim_end());
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("sim,c1,ticket,2,0,"));
}

#[test]
fn simulate_json_and_side_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let prof = dir.path().join("prof.csv");
    let o = run(&[
        "--format", "json", "--seed", "4",
        "simulate", "--config", "c3", "--cores", "4", "--max-ticks", "20000",
        "--log", log.to_str().unwrap(), "--profile-out", prof.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["cores"], 4);
    assert_eq!(v[0]["seed"], 4);
    let lines = fs::read_to_string(&log).unwrap();
    assert!(lines.lines().count() > 100);
    for l in lines.lines().take(20) {
        serde_json::from_str::<serde_json::Value>(l).unwrap();
    }
    let profile = fs::read_to_string(&prof).unwrap();
    assert!(profile.starts_with("func,time_per_cycle\n"));
    assert!(profile.contains("SPIN,"));
}

#[test]
fn sweep_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<_> = (0..2).map(|i| dir.path().join(format!("s{i}.csv"))).collect();
    for out in &outs {
        let o = run(&[
            "--out", out.to_str().unwrap(),
            "sweep", "--config", "c1", "--cores", "1..3", "--seeds", "2", "--max-ticks", "20000",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(&outs[0]).unwrap();
    assert_eq!(a, fs::read(&outs[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    // 3 core counts x (2 runs + 1 mean) plus the header
    assert_eq!(text.lines().count(), 10);
    assert_eq!(text.lines().filter(|l| l.starts_with("mean,")).count(), 3);
}

#[test]
fn sweep_on_another_platform_and_policy() {
    let o = run(&[
        "sweep", "--config", "c1", "--platform", "p3", "--latency", "5",
        "--cores", "1,4", "--seeds", "1", "--policy", "localspin:0", "--max-ticks", "20000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("localspin:0"));
}

#[test]
fn baseline_mva_saturates() {
    let o = run(&["--format", "json", "baseline-mva", "--config", "c3", "--cores", "32"]);
    assert_eq!(code(&o), 0);
    let v: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.len(), 32);
    let s: Vec<f64> = v.iter().map(|r| r["speedup"].as_f64().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(v.iter().all(|r| r["source"] == "mva"));
}

#[test]
fn ssc_search_reports_trace() {
    let o = run(&[
        "ssc-search", "--config", "c1", "--max-cores", "8", "--max-ticks", "20000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("kind,n,p_bar,throughput\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("best,")).count(), 1);
    let o = run(&[
        "--format", "json", "ssc-search", "--config", "c1", "--max-cores", "4",
        "--max-ticks", "20000", "--exhaustive",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["queries"].as_array().unwrap().len(), 4);
}

#[test]
fn contention_metrics_picks_llc_access_rate() {
    let o = run(&[
        "contention-metrics",
        "--corun", fixture("npb_corun.csv").to_str().unwrap(),
        "--metrics", fixture("metric_scores.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("metric,llc_access_per_instruction,selected,1.0\n"));
    assert!(text.contains("degradation,EP,UA,"));
}

#[test]
fn contention_metrics_long_form() {
    let dir = tempfile::tempdir().unwrap();
    let corun = dir.path().join("corun.csv");
    fs::write(&corun, "background,a,b\na,2,3\nb,1.5,4\nsolo,1,2\n").unwrap();
    let metrics = dir.path().join("m.csv");
    let mut text = String::from("metric,background,target,value\n");
    for (m, scale) in [("steady", 1.0), ("jumpy", 3.0)] {
        text += &format!("{m},solo,a,1\n{m},solo,b,0.6\n");
        for bg in ["a", "b"] {
            for tg in ["a", "b"] {
                let base = if tg == "a" { 1.0 } else { 0.6 };
                text += &format!("{m},{bg},{tg},{}\n", base * (1.0 + 0.1 * scale));
            }
        }
    }
    fs::write(&metrics, text).unwrap();
    let o = run(&[
        "--format", "json", "contention-metrics",
        "--corun", corun.to_str().unwrap(), "--metrics", metrics.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["winner"], "steady");
    assert_eq!(v["intensity"].as_array().unwrap().len(), 2);
}

#[test]
fn scalval_top_ten() {
    let o = run(&[
        "scalval",
        "--single", fixture("tpcc_single.csv").to_str().unwrap(),
        "--multi", fixture("tpcc_multi.csv").to_str().unwrap(),
        "--top", "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().nth(1).unwrap().starts_with("copy_user_generic_string,"));
    let last: f64 = text.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((last - 0.584).abs() < 0.01, "{last}");
}

#[test]
fn scalval_reads_simulator_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    for (cores, name) in [("1", "one.csv"), ("8", "eight.csv")] {
        let o = run(&[
            "simulate", "--config", "c1", "--cores", cores, "--max-ticks", "100000",
            "--profile-out", p(name).to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    let o = run(&[
        "scalval", "--single", p("one.csv").to_str().unwrap(),
        "--multi", p("eight.csv").to_str().unwrap(), "--multi-cores", "8",
    ]);
    assert_eq!(code(&o), 0);
    let top: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .take(2)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert!(top.iter().all(|f| f == "SPIN" || f == "LOCK_MISS"), "{top:?}");
}

#[test]
fn repro_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out", dir.path().to_str().unwrap(),
        "repro", "fig3_13", "--seeds", "1", "--max-ticks", "5000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c3 = fs::read_to_string(dir.path().join("fig3_13_c3.csv")).unwrap();
    assert!(c3.starts_with("cores,lat1,lat5,lat10\n"));
    assert_eq!(c3.lines().count(), 33);
    assert!(dir.path().join("fig3_13_c4.csv").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["simulate", "--config", "c1"])), 1);
    assert_eq!(code(&run(&["--format", "xml", "simulate", "--config", "c1", "--cores", "1"])), 1);
    assert_eq!(code(&run(&["simulate", "--config", "c1", "--cores", "1", "--policy", "fifo"])), 1);
    assert_eq!(code(&run(&["repro", "fig9"])), 1);
    assert_eq!(code(&run(&["sweep", "--config", "c1", "--seeds", "0"])), 1);
    assert_eq!(code(&run(&["simulate", "--config", "/nonexistent.toml", "--cores", "1"])), 2);
    assert_eq!(code(&run(&["simulate", "--config", "c1", "--cores", "64"])), 2);
    assert_eq!(code(&run(&["sweep", "--config", "c1", "--cores", "1..40"])), 2);
    assert_eq!(code(&run(&["contention-metrics", "--corun", "/nonexistent.csv"])), 2);
}
