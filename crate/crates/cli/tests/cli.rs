use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn litmus(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/litmus");
    dir.join(format!("{name}.litmus")).display().to_string()
}

fn memcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memcat")).env_remove("MEMCAT_MODELS_DIR").args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn kind<'a>(rs: &'a [Value], k: &str) -> Vec<&'a Value> {
    rs.iter().filter(|r| r["kind"] == k).collect()
}

#[test]
fn run_reports_verdicts_and_blocking_checks() {
    let o = memcat(&[
        "--format",
        "jsonl",
        "run",
        "-m",
        "power",
        &litmus("mp+lwsync+addr"),
        &litmus("w+rwc+eieio+addr+sync"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rs = records(&o);
    assert_eq!(rs.len(), 2);
    assert_eq!(rs[0]["test"], "mp+lwsync+addr");
    assert_eq!(rs[0]["verdict"], "forbidden");
    assert_eq!(rs[0]["blocking"], serde_json::json!(["observation"]));
    assert_eq!(rs[1]["verdict"], "allowed");
    assert_eq!(rs[1]["status"], "pass");
}

#[test]
fn unknown_model_is_a_usage_error() {
    let o = memcat(&["run", "-m", "nosuch", &litmus("mp")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatch_exits_one_and_parse_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(litmus("mp")).unwrap().replace("power: allowed", "power: forbidden");
    let wrong = dir.path().join("mp.litmus");
    std::fs::write(&wrong, text).unwrap();
    let o = memcat(&["run", "-m", "power", wrong.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));

    let bad = dir.path().join("bad.litmus");
    std::fs::write(&bad, "bad Power\nthread T0 {\n  frob r1\n}\n").unwrap();
    let o = memcat(&["--format", "jsonl", "run", "-m", "power", bad.to_str().unwrap(), &litmus("sb")]);
    assert_eq!(o.status.code(), Some(2));
    let rs = records(&o);
    assert_eq!(kind(&rs, "error").len(), 1);
    assert_eq!(kind(&rs, "run").len(), 1);
}

#[test]
fn compare_examples() {
    let o = memcat(&["--format", "jsonl", "compare", "-a", "power", "-b", "power", "--bundled"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(records(&o).iter().all(|r| r["diverges"] == false));

    let co: Vec<String> = ["coWW", "coRW1", "coRW2", "coWR", "coRR"].iter().map(|n| litmus(n)).collect();
    let mut args = vec!["--format", "jsonl", "compare", "-a", "arm", "-b", "arm-llh"];
    args.extend(co.iter().map(String::as_str));
    let o = memcat(&args);
    assert_eq!(o.status.code(), Some(1));
    let rs = records(&o);
    let div: Vec<&Value> = rs.iter().filter(|r| r["diverges"] == true).collect();
    assert_eq!(div.len(), 1);
    assert_eq!(div[0]["test"], "coRR");
    assert_eq!(div[0]["checks_a"], serde_json::json!(["sc-per-location"]));

    let o =
        memcat(&["--format", "jsonl", "compare", "-a", "power-as-arm", "-b", "arm", &litmus("mp+dmb+fri-rfi-ctrlisb")]);
    let rs = records(&o);
    assert_eq!(rs[0]["diverges"], true);
    assert_eq!(rs[0]["verdict_a"], "forbidden");
    assert_eq!(rs[0]["verdict_b"], "allowed");
}

#[test]
fn machine_passes_and_skips() {
    let o = memcat(&["--format", "jsonl", "machine", &litmus("sb"), &litmus("mp+lwsync+addr")]);
    assert_eq!(o.status.code(), Some(0));
    let rs = records(&o);
    let sb = rs.iter().find(|r| r["test"] == "sb").unwrap();
    assert_eq!(sb["status"], "pass");
    let relaxed = Value::String("T0:r1=0; T1:r1=0".into());
    assert!(sb["machine_states"].as_array().unwrap().contains(&relaxed));
    assert!(sb["axiomatic_states"].as_array().unwrap().contains(&relaxed));

    let o = memcat(&["--format", "jsonl", "machine", "--bound", "3", &litmus("sb")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(records(&o)[0]["status"], "skipped");
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    let o = memcat(&["machine", "--bound", "0", &litmus("sb")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn machine_trace_dump() {
    let o = memcat(&["machine", "--trace", &litmus("mp+lwsync+addr")]);
    let out = stdout(&o);
    assert!(out.contains("# machine mp+lwsync+addr"));
    assert!(out.contains("cp(a:Wx=1) ok"));
    assert!(out.contains("accepted"));
}

#[test]
fn cycles_examples() {
    let dir = tempfile::tempdir().unwrap();
    let straight = dir.path().join("straight.ir");
    std::fs::write(&straight, "T0: W x; R y; W z\n").unwrap();
    let broken = dir.path().join("broken.ir");
    std::fs::write(&broken, "T0: W x; frob; R y\n").unwrap();
    let o = memcat(&[
        "--format",
        "jsonl",
        "cycles",
        &litmus("mp"),
        &litmus("coWW"),
        straight.to_str().unwrap(),
        broken.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let rs = records(&o);
    assert_eq!(kind(&rs, "error").len(), 1);
    let cycles = kind(&rs, "cycle");
    let mp: Vec<_> = cycles.iter().filter(|c| c["input"] == "mp").collect();
    assert_eq!(mp.len(), 1);
    assert_eq!(mp[0]["classic"], "mp");
    assert_eq!(mp[0]["axiom"], "observation");
    let inputs = kind(&rs, "input");
    assert_eq!(inputs.iter().find(|i| i["input"] == "straight").unwrap()["cycles"], 0);

    let o = memcat(&["cycles", &litmus("coWW")]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("coWW") && l.contains("sc-per-location")));
}

#[test]
fn table_is_rendered_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["run".into(), "-m".into(), "power".into(), litmus("mp"), litmus("sb+syncs")],
        vec!["compare".into(), "-a".into(), "arm".into(), "-b".into(), "arm-llh".into(), litmus("coRR")],
        vec!["machine".into(), "--trace".into(), litmus("lb"), litmus("iriw")],
        vec!["cycles".into(), litmus("iriw"), litmus("s"), litmus("coRW2")],
    ];
    for (i, case) in cases.iter().enumerate() {
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        let table = memcat(&args);
        let mut j = vec!["--format", "jsonl"];
        j.extend(&args);
        let jsonl = memcat(&j);
        assert_eq!(table.status.code(), jsonl.status.code());
        let file = dir.path().join(format!("{i}.jsonl"));
        std::fs::write(&file, &jsonl.stdout).unwrap();
        let rendered = memcat(&["render", file.to_str().unwrap()]);
        assert_eq!(stdout(&rendered), stdout(&table), "{case:?}");
        assert_eq!(rendered.status.code(), table.status.code());
        let again = memcat(&["--format", "jsonl", "render", file.to_str().unwrap()]);
        assert_eq!(stdout(&again), stdout(&jsonl), "round trip {case:?}");
    }
}

#[test]
fn models_dir_overrides_bundled_models() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("power.cat"), "arch Power\n(* sc *) acyclic po|com\n").unwrap();
    let run = |env: bool| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_memcat"));
        c.args(["--format", "jsonl", "run", "-m", "power", &litmus("mp")]);
        if env {
            c.env("MEMCAT_MODELS_DIR", dir.path());
        } else {
            c.env_remove("MEMCAT_MODELS_DIR");
        }
        c.output().unwrap()
    };
    let o = run(false);
    assert_eq!(records(&o)[0]["verdict"], "allowed");
    let o = run(true);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(records(&o)[0]["verdict"], "forbidden");
}

#[test]
fn glob_and_directory_inputs() {
    let pattern = litmus("co*");
    let o = memcat(&["--format", "jsonl", "run", "-m", "power", &pattern]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = records(&o).iter().map(|r| r["test"].as_str().unwrap().to_string()).collect();
    assert_eq!(names, ["coRR", "coRW1", "coRW2", "coWR", "coWW"]);
    let o = memcat(&["--format", "jsonl", "run", "-m", "power", "--bundled"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(records(&o).len() >= 45);
}
