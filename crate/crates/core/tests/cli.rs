use elhlearn::reasoner::{inseparable, Lang};
use elhlearn::syntax::{parse_abox, parse_tbox};
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elhlearn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elhlearn")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reason_example_one() {
    let o = run(&["reason", &data("nested_exists.tbox"), &data("nested_exists.abox"), &data("nested_exists.query")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "ENTAILED\n");
}

#[test]
fn reason_branching_cq() {
    let o = run(&["reason", &data("branching_cq.tbox"), &data("branching_cq.abox"), &data("branching_cq.query")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "ENTAILED\n");
}

#[test]
fn reason_not_entailed_with_explanation() {
    let q = scratch("b.query");
    std::fs::write(&q, "Q: AQ B(a)\n").unwrap();
    let o = run(&["reason", &data("nested_exists.tbox"), &data("nested_exists.abox"), q.to_str().unwrap(), "--explain"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "NOT_ENTAILED\n  a: A\n");
}

#[test]
fn reason_unsupported_and_parse_errors() {
    let empty = scratch("empty.tbox");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["reason", empty.to_str().unwrap(), &data("branching_cq.abox"), &data("nonrooted.query")]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["reason", &data("broken.tbox"), &data("branching_cq.abox"), &data("branching_cq.query")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn learn_aq_example_one_with_stats() {
    let stats = scratch("aq.json");
    let tr = scratch("aq.jsonl");
    let o = run(&[
        "learn",
        "aq",
        &data("nested_exists.tbox"),
        &data("nested_exists.abox"),
        "--stats",
        stats.to_str().unwrap(),
        "--transcript",
        tr.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = json(&stats);
    assert_eq!(s["verifiedInseparable"], Value::Bool(true));
    let h = parse_tbox(&stdout(&o)).unwrap();
    let t = parse_tbox(&std::fs::read_to_string(data("nested_exists.tbox")).unwrap()).unwrap();
    let a0 = parse_abox(&std::fs::read_to_string(data("nested_exists.abox")).unwrap()).unwrap();
    assert!(inseparable(&t, &h, &a0, Lang::Aq).is_yes());
    let entries: Vec<Value> =
        std::fs::read_to_string(&tr).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let count = |k: &str| entries.iter().filter(|e| e["kind"] == k).count() as u64;
    let total: u64 = entries.iter().map(|e| e["inputSize"].as_u64().unwrap()).sum();
    assert_eq!(s["mqCount"].as_u64(), Some(count("MQ")));
    assert_eq!(s["eqCount"].as_u64(), Some(count("EQ")));
    assert_eq!(s["totalQueryInputSize"].as_u64(), Some(total));
}

#[test]
fn learn_cqr_adversarial_converts() {
    let stats = scratch("cqr.json");
    let o = run(&[
        "learn",
        "cqr",
        &data("branching_cq.tbox"),
        &data("branching_cq.abox"),
        "--oracle-policy",
        "adversarial-cq",
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = json(&stats);
    assert!(s["conversions"].as_u64().unwrap() > 0);
    assert_eq!(s["verifiedInseparable"], Value::Bool(true));
}

#[test]
fn learn_iq_empty_target_stops_at_first_yes() {
    let empty = scratch("empty_target.tbox");
    std::fs::write(&empty, "").unwrap();
    let stats = scratch("iq_empty.json");
    let o = run(&["learn", "iq", empty.to_str().unwrap(), &data("nested_exists.abox"), "--stats", stats.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&stats)["eqCount"].as_u64(), Some(1));
}

#[test]
fn learn_budget_exit_code() {
    let stats = scratch("budget.json");
    let o = run(&[
        "learn",
        "iq",
        &data("two_ci.tbox"),
        &data("two_ci.abox"),
        "--budget",
        "2",
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&stats)["budgetExceeded"], Value::Bool(true));
}

#[test]
fn learn_is_deterministic_per_seed() {
    let args = ["learn", "iq", &data("two_ci.tbox"), &data("two_ci.abox"), "--oracle-policy", "seed-randomized", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn update_check_loses_inseparability() {
    let o = run(&[
        "update-check",
        &data("update_loss.tbox"),
        &data("update_loss.hyp"),
        &data("update_loss.abox"),
        &data("update_loss_updated.abox"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "NOT_PRESERVED\n");
    let o = run(&["update-check", &data("update_loss.tbox"), &data("update_loss.hyp"), &data("update_loss.abox"), &data("update_loss.abox")]);
    assert_eq!(stdout(&o), "PRESERVED\n");
}

#[test]
fn batch_build_then_learn() {
    let batch = scratch("two_ci.jsonl");
    for mode in ["aq", "iq", "cqr"] {
        let o = run(&["batch", "build", mode, &data("two_ci.tbox"), &data("two_ci.abox"), "--out", batch.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let o = run(&["batch", "learn", mode, batch.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let h = parse_tbox(&stdout(&o)).unwrap();
        let t = parse_tbox(&std::fs::read_to_string(data("two_ci.tbox")).unwrap()).unwrap();
        let a0 = parse_abox(&std::fs::read_to_string(data("two_ci.abox")).unwrap()).unwrap();
        assert!(inseparable(&t, &h, &a0, mode.parse().unwrap()).is_yes(), "{mode}");
    }
}

#[test]
fn pac_run_meets_epsilon() {
    let o = run(&["pac", "run", "iq", &data("two_ci.tbox"), &data("two_ci.abox"), "--eps", "0.1", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let trials: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trials.len(), 100);
    let good = trials.iter().filter(|t| t["trueError"].as_f64().unwrap() <= 0.1).count();
    assert!(good >= 90, "{good}");
    for t in &trials {
        let schedule: Vec<u64> = t["schedule"].as_array().unwrap().iter().map(|m| m.as_u64().unwrap()).collect();
        assert_eq!(schedule[0], 30);
        assert!(t["samplesUsed"].as_u64().unwrap() <= schedule.iter().sum());
    }
}

#[test]
fn pac_run_csv() {
    let o = run(&["pac", "run", "aq", &data("two_ci.tbox"), &data("two_ci.abox"), "--trials", "3", "--csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "trial,stages,samples_used,true_error,schedule");
    assert_eq!(lines.len(), 4);
}

#[test]
fn vc_check_cycle_shattering() {
    let o = run(&["vc", "check", "--n", "2"]);
    assert_eq!((o.status.code(), stdout(&o)), (Some(0), "SHATTERED\n".to_string()));
    let o = run(&["vc", "check", "--n", "2", "--loop"]);
    assert_eq!((o.status.code(), stdout(&o)), (Some(1), "NOT_SHATTERED\n".to_string()));
    let o = run(&["vc", "check", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
