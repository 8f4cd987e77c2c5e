//! End-to-end CLI checks: golden scoring fixture, exit-code contract,
//! and config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_var-workbench"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .env_remove("VAR_WORKBENCH_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

const GOLDEN_TRAJECTORIES: &str = r#"{"id":"perfect","text":"<visual_perception>a cat <box>0,0,2,2</box></visual_perception>\n<think><node id=1>look</node>\n<done></think>\n<answer>B</answer>"}
{"id":"geo-seventh","text":"<visual_perception>a cat <box>0,0,2,2</box></visual_perception>\n<think><node id=1>look</node>\n<done></think>\n<answer>B</answer>"}
{"id":"geo-precision","text":"<visual_perception>a cat <box>0,0,2,2</box> stray <box>5,5,6,6</box></visual_perception>\n<think><node id=1>look</node>\n<done></think>\n<answer>B</answer>"}
{"id":"unparseable","text":"not a trajectory at all"}
{"id":"wrong-answer","text":"<visual_perception>a cat <box>0,0,2,2</box></visual_perception>\n<think><node id=1>look</node>\n<done></think>\n<answer>C</answer>"}
"#;

const GOLDEN_ANNOTATIONS: &str = r#"{"question":"q1","answer":"B","boxes":[[0,0,2,2]]}
{"question":"q2","answer":"B","boxes":[[1,1,3,3]]}
{"question":"q3","answer":"B","boxes":[[0,0,2,2]]}
{"question":"q4","answer":"B","boxes":[[0,0,2,2]]}
{"question":"q5","answer":"B","boxes":[[0,0,2,2]]}
"#;

const GOLDEN_ORACLE: &str = r#"{"q1":"B","q2":"B","q3":"B","q4":"B","q5":"B"}"#;

#[test]
fn golden_score_fixture_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "traj.jsonl", GOLDEN_TRAJECTORIES);
    write(d, "ann.jsonl", GOLDEN_ANNOTATIONS);
    write(d, "oracle.json", GOLDEN_ORACLE);
    write(
        d,
        "config.json",
        r#"{"oracle": {"mode": "scripted", "fixture_path": "oracle.json"}}"#,
    );

    let args = [
        "score",
        "--trajectories",
        "traj.jsonl",
        "--annotations",
        "ann.jsonl",
        "--config",
        "config.json",
    ];
    let out1 = run_in(
        d,
        &args[..]
            .iter()
            .chain(&["--out", "r1"])
            .copied()
            .collect::<Vec<_>>(),
    );
    assert!(
        out1.status.success(),
        "{}",
        String::from_utf8_lossy(&out1.stderr)
    );
    let out2 = run_in(
        d,
        &args[..]
            .iter()
            .chain(&["--out", "r2"])
            .copied()
            .collect::<Vec<_>>(),
    );
    assert!(out2.status.success());

    let csv1 = fs::read(d.join("r1/summary.csv")).unwrap();
    let csv2 = fs::read(d.join("r2/summary.csv")).unwrap();
    assert_eq!(csv1, csv2, "summary must be byte-identical across runs");
    let rows1 = fs::read(d.join("r1/rewards.jsonl")).unwrap();
    let rows2 = fs::read(d.join("r2/rewards.jsonl")).unwrap();
    assert_eq!(rows1, rows2);

    // hand-derived component values
    let rows: Vec<serde_json::Value> = String::from_utf8(rows1)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // perfect: all components 1, default weights 0.5 -> total 2.5
    assert_eq!(rows[0]["total"], 2.5);
    // geo 1/7 case
    assert!((rows[1]["geo"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
    // geo 0.75 case (recall 1, precision 0.5)
    assert_eq!(rows[2]["geo"], 0.75);
    // unparseable: all zero, soft failure
    assert_eq!(rows[3]["total"], 0.0);
    // wrong answer: acc 0, rest 1
    assert_eq!(rows[4]["acc"], 0.0);
    assert_eq!(rows[4]["fmt"], 1.0);
}

#[test]
fn score_rereads_its_own_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "traj.jsonl", GOLDEN_TRAJECTORIES);
    write(d, "ann.jsonl", GOLDEN_ANNOTATIONS);
    write(d, "oracle.json", GOLDEN_ORACLE);
    write(
        d,
        "config.json",
        r#"{"oracle": {"mode": "scripted", "fixture_path": "oracle.json"}}"#,
    );
    let out = run_in(
        d,
        &[
            "score",
            "--trajectories",
            "traj.jsonl",
            "--annotations",
            "ann.jsonl",
            "--config",
            "config.json",
            "--out",
            "r",
        ],
    );
    assert!(out.status.success());
    // JSONL rows parse back; CSV has the expected shape
    for line in fs::read_to_string(d.join("r/rewards.jsonl"))
        .unwrap()
        .lines()
    {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
    let csv = fs::read_to_string(d.join("r/summary.csv")).unwrap();
    assert!(csv.starts_with("component,mean\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn scripted_search_solves_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "script.json",
        r#"[{"kind":"extend","proposition":"s1"},{"kind":"extend","proposition":"s2"},{"kind":"finish"}]"#,
    );
    let args = [
        "search",
        "--policy",
        "scripted:script.json",
        "--root",
        "Q",
        "--seed",
        "9",
    ];
    let out1 = run_in(
        d,
        &args
            .iter()
            .chain(&["--out", "a"])
            .copied()
            .collect::<Vec<_>>(),
    );
    assert!(out1.status.success());
    let out2 = run_in(
        d,
        &args
            .iter()
            .chain(&["--out", "b"])
            .copied()
            .collect::<Vec<_>>(),
    );
    assert!(out2.status.success());
    assert_eq!(
        fs::read(d.join("a/outcome.json")).unwrap(),
        fs::read(d.join("b/outcome.json")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("a/events.jsonl")).unwrap(),
        fs::read(d.join("b/events.jsonl")).unwrap()
    );
    let outcome: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("a/outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome["status"], "solved");
    assert_eq!(outcome["cot"], serde_json::json!(["s1", "s2"]));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // 3: out-of-domain grid value
    let out = run_in(
        d,
        &["lemma", "--delta", "0.6", "--trials", "10", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(3));

    // 3: unknown policy spec
    let out = run_in(d, &["search", "--policy", "mystery:7", "--out", "x"]);
    assert_eq!(out.status.code(), Some(3));

    // 2: search that cannot solve (empty script finishes at the root)
    write(d, "empty.json", "[]");
    let out = run_in(
        d,
        &[
            "search",
            "--policy",
            "scripted:empty.json",
            "--t-max",
            "3",
            "--budget-b",
            "2",
            "--out",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // 2: perturbed parity run is the failing negative control
    let out = run_in(
        d,
        &[
            "parity",
            "--n",
            "2",
            "--permutations",
            "2",
            "--perturb",
            "--out",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // 1: missing input file
    let out = run_in(
        d,
        &[
            "score",
            "--trajectories",
            "absent.jsonl",
            "--annotations",
            "absent.jsonl",
            "--out",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    // 0: healthy parity run
    let out = run_in(
        d,
        &["parity", "--n", "2", "--permutations", "2", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn env_var_sets_default_config_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "cfg.json", r#"{"master_seed": 4242}"#);
    write(
        d,
        "script.json",
        r#"[{"kind":"extend","proposition":"a"},{"kind":"extend","proposition":"b"},{"kind":"finish"}]"#,
    );
    // run with env config, then with the same seed given explicitly
    let out_env = bin()
        .current_dir(d)
        .env("VAR_WORKBENCH_CONFIG", "cfg.json")
        .args([
            "search",
            "--policy",
            "scripted:script.json",
            "--out",
            "via-env",
        ])
        .output()
        .unwrap();
    assert!(
        out_env.status.success(),
        "{}",
        String::from_utf8_lossy(&out_env.stderr)
    );
    let out_flag = run_in(
        d,
        &[
            "search",
            "--policy",
            "scripted:script.json",
            "--seed",
            "4242",
            "--out",
            "via-flag",
        ],
    );
    assert!(out_flag.status.success());
    assert_eq!(
        fs::read(d.join("via-env/events.jsonl")).unwrap(),
        fs::read(d.join("via-flag/events.jsonl")).unwrap()
    );

    // flag wins over env
    write(
        d,
        "cfg2.json",
        r#"{"output_dir": "never-used", "master_seed": 1}"#,
    );
    let out = bin()
        .current_dir(d)
        .env("VAR_WORKBENCH_CONFIG", "cfg2.json")
        .args([
            "search",
            "--policy",
            "scripted:script.json",
            "--config",
            "cfg.json",
            "--out",
            "flag-wins",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        fs::read(d.join("via-env/events.jsonl")).unwrap(),
        fs::read(d.join("flag-wins/events.jsonl")).unwrap()
    );
}

#[test]
fn unit_weights_make_a_perfect_record_score_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "traj.jsonl",
        r#"{"text":"<visual_perception>a cat <box>0,0,2,2</box></visual_perception>\n<think><node id=1>look</node>\n<done></think>\n<answer>B</answer>"}
"#,
    );
    write(
        d,
        "ann.jsonl",
        "{\"question\":\"q1\",\"answer\":\"B\",\"boxes\":[[0,0,2,2]]}\n",
    );
    write(d, "oracle.json", r#"{"q1":"B"}"#);
    write(
        d,
        "config.json",
        r#"{"weights": {"w_fmt": 1.0, "w_sem": 1.0, "w_geo": 1.0},
            "oracle": {"mode": "scripted", "fixture_path": "oracle.json"}}"#,
    );
    let out = run_in(
        d,
        &[
            "score",
            "--trajectories",
            "traj.jsonl",
            "--annotations",
            "ann.jsonl",
            "--config",
            "config.json",
            "--out",
            "r",
        ],
    );
    assert!(out.status.success());
    let row: serde_json::Value = serde_json::from_str(
        fs::read_to_string(d.join("r/rewards.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(row["total"], 4.0);
}

#[test]
fn lemma_single_cell_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_in(
        d,
        &[
            "lemma", "--gamma", "0.5", "--delta", "0.1", "--t-max", "5", "--trials", "100",
            "--seed", "1", "--out", "r",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(d.join("r/lemma_grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("gamma,delta,t_max,epsilon,budget_b"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn overshoot_sweep_table_is_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_in(
        d,
        &[
            "lemma",
            "--gamma",
            "0.5",
            "--delta",
            "0.1",
            "--t-max",
            "5",
            "--trials",
            "300",
            "--seed",
            "1",
            "--overshoot-sweep",
            "0,0.3",
            "--overshoot-depth",
            "2",
            "--out",
            "r",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(d.join("r/overshoot_sweep.csv")).unwrap();
    assert!(csv.starts_with("overshoot_prob,trials,successes,rate"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn parity_single_permutation_checks_all_sign_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run_in(
        d,
        &["parity", "--n", "2", "--permutations", "1", "--out", "r"],
    );
    assert!(out.status.success());
    let reports = fs::read_to_string(d.join("r/parity_report.jsonl")).unwrap();
    assert_eq!(reports.lines().count(), 4);
    for line in reports.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["cost_is_zero"], true);
        assert_eq!(v["first_move_matches"], true);
        assert_eq!(v["switches_match"], true);
    }
}

#[test]
fn parity_accepts_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "instances.jsonl",
        "{\"n\":2,\"pi\":[1,2],\"x\":[1,1]}\n{\"n\":4,\"pi\":[2,1,4,3],\"x\":[-1,-1,1,-1]}\n",
    );
    let out = run_in(
        d,
        &["parity", "--instances", "instances.jsonl", "--out", "r"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let reports = fs::read_to_string(d.join("r/parity_report.jsonl")).unwrap();
    assert_eq!(reports.lines().count(), 2);
}
