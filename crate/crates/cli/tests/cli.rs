use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_budgeval"));
    c.env("RUST_LOG", "info");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cost_model() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cost_model.json")
}

fn write_jsonl(path: &Path, rows: &[serde_json::Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, text).unwrap();
}

/// 3 problems x 4 candidates plus one greedy candidate on p0.
fn mini_corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let problems: Vec<_> = [("p0", 4), ("p1", 9), ("p2", 0)]
        .iter()
        .map(|(id, want)| {
            json!({
                "problem_id": id,
                "benchmark": "instruction_function",
                "prompt": "square it",
                "test_payload": format!("assert f({}) == {want}\n", (*want as f64).sqrt() as i64),
            })
        })
        .collect();
    let bodies = [
        "def f(x):\n    return x * x\n",
        "def f(x):\n    return x + 1\n",
        "def f(x):\n    return y\n",
        "def f(x):\n    return x ** 2\n",
    ];
    let mut gens = Vec::new();
    for p in ["p0", "p1", "p2"] {
        for (i, b) in bodies.iter().enumerate() {
            gens.push(json!({"problem_id": p, "candidate_index": i, "text": b, "completed": true}));
        }
    }
    gens.push(json!({"problem_id": "p0", "candidate_index": 0, "text": bodies[0], "completed": true, "mode": "greedy"}));
    let (pp, gp) = (dir.join("problems.jsonl"), dir.join("generations.jsonl"));
    write_jsonl(&pp, &problems);
    write_jsonl(&gp, &gens);
    (pp, gp)
}

#[test]
fn execute_writes_verdicts_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let (pp, gp) = mini_corpus(dir.path());
    let out = dir.path().join("run");
    let args = [
        "execute",
        "--problems",
        pp.to_str().unwrap(),
        "--generations",
        gp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--parallelism",
        "4",
    ];
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let verdicts = fs::read_to_string(out.join("verdicts.jsonl")).unwrap();
    let sampled = verdicts.lines().filter(|l| !l.contains("\"greedy\"")).count();
    assert_eq!(sampled, 12);
    assert_eq!(verdicts.lines().count(), 13);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary, "problem_id,n,c,greedy_pass\np0,4,2,1\np1,4,2,\np2,4,2,\n");

    let second = run(&args);
    assert_eq!(code(&second), 0);
    assert!(stderr(&second).contains("13/13 executed (13 from checkpoint)"), "{}", stderr(&second));
    assert_eq!(fs::read_to_string(out.join("summary.csv")).unwrap(), summary);
    assert_eq!(fs::read_to_string(out.join("verdicts.jsonl")).unwrap(), verdicts);
}

#[test]
fn missing_interpreter_is_an_infrastructure_error() {
    let dir = tempfile::tempdir().unwrap();
    let (pp, gp) = mini_corpus(dir.path());
    let out = dir.path().join("run");
    let o = run(&[
        "execute",
        "--problems",
        pp.to_str().unwrap(),
        "--generations",
        gp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--interpreter",
        "/nonexistent/python3",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("fail_setup"), "{}", stderr(&o));
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn malformed_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (pp, _) = mini_corpus(dir.path());
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"problem_id\": \"p0\", \"candidate_index\": 0\n").unwrap();
    let o = run(&[
        "execute",
        "--problems",
        pp.to_str().unwrap(),
        "--generations",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    assert_eq!(code(&run(&["score", "--out", "x"])), 1);
    assert_eq!(code(&run(&["nonsense"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

/// Writes a verdict file with `n` samples per problem and `passes[i]` passes
/// on problem i.
fn verdict_file(path: &Path, n: u32, passes: &[u32], greedy: Option<&[bool]>) {
    let mut rows = Vec::new();
    for (p, &c) in passes.iter().enumerate() {
        for i in 0..n {
            let verdict = if i < c { "pass" } else { "fail_assertion" };
            rows.push(json!({"problem_id": format!("q{p}"), "candidate_index": i, "verdict": verdict, "duration": 0.01}));
        }
        if let Some(g) = greedy {
            let verdict = if g[p] { "pass" } else { "fail_runtime" };
            rows.push(json!({"problem_id": format!("q{p}"), "candidate_index": 0, "mode": "greedy", "verdict": verdict, "duration": 0.01}));
        }
    }
    write_jsonl(path, &rows);
}

#[test]
fn score_tables() {
    let dir = tempfile::tempdir().unwrap();
    let all = dir.path().join("all.jsonl");
    let some = dir.path().join("some.jsonl");
    verdict_file(&all, 8, &[8, 8, 8], None);
    verdict_file(&some, 4, &[1, 0, 4], Some(&[true, false, false]));
    let out = dir.path().join("score");
    let o = run(&[
        "score",
        "--verdicts",
        &format!("big={}", all.display()),
        "--verdicts",
        &format!("small={}", some.display()),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("pass_at_k.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "model,greedy,pass@1,pass@2,pass@4,pass@16,pass@64,pass@128,pass@256,pass@500,pass@1000"
    );
    assert_eq!(lines[1], "big,--.-,100.0,100.0,100.0,--.-,--.-,--.-,--.-,--.-,--.-");
    // small: pass@1 = (1/4 + 0 + 1) / 3, pass@2 = (1/2 + 0 + 1) / 3
    assert_eq!(lines[2], "small,33.3,41.7,50.0,--.-,--.-,--.-,--.-,--.-,--.-,--.-");
    let txt = fs::read_to_string(out.join("pass_at_k.txt")).unwrap();
    assert_eq!(txt, stdout(&o));
    assert!(txt.lines().all(|l| !l.ends_with(' ')));

    let over = run(&["score", "--verdicts", &format!("small={}", some.display()), "--k", "1,3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&over), 1);
    assert!(stderr(&over).contains("--no-cap"));
    let uncapped = run(&[
        "score",
        "--verdicts",
        &format!("small={}", some.display()),
        "--k",
        "1,3",
        "--no-cap",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&uncapped), 0, "{}", stderr(&uncapped));
    assert!(fs::read_to_string(out.join("pass_at_k.csv")).unwrap().contains("small,33.3,41.7,58.3"));
}

fn read_curve(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn pass_curves() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.jsonl");
    verdict_file(&v, 64, &[1, 5, 20, 64, 0], Some(&[true, false, true, false, false]));
    let out = dir.path().join("curves");
    let o = run(&[
        "curve",
        "--verdicts",
        &format!("70B={}", v.display()),
        "--verdicts",
        &format!("7B={}", v.display()),
        "--cost-model",
        cost_model().to_str().unwrap(),
        "--budget-kind",
        "flops",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let big = read_curve(&out.join("curve_70B_unit-test_flops.csv"));
    let budgets: Vec<&str> = big.iter().filter(|r| r[0] == "grid").map(|r| r[1].as_str()).collect();
    // nothing below one 70B generation (10.41)
    assert_eq!(budgets, ["16", "32", "64", "128", "256", "512", "1024"]);
    let greedy = big.iter().find(|r| r[0] == "greedy").unwrap();
    assert_eq!(greedy[1], "10.41");
    assert_eq!(greedy[3], "40");

    let small = read_curve(&out.join("curve_7B_unit-test_flops.csv"));
    let scores: Vec<f64> = small.iter().filter(|r| r[0] == "grid").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(scores.len(), 11);
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    // the 64-sample cap clamps k at 32 from budget 64 on
    let clamped: Vec<&str> = small.iter().filter(|r| r[0] == "grid").map(|r| r[4].as_str()).collect();
    assert_eq!(clamped.iter().filter(|c| **c == "true").count(), 5);

    let axes: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("axes.json")).unwrap()).unwrap();
    assert_eq!(axes["x"]["scale"], "log2");
    assert_eq!(axes["series"].as_array().unwrap().len(), 2);

    let unknown = run(&[
        "curve",
        "--verdicts",
        &format!("9B={}", v.display()),
        "--cost-model",
        cost_model().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&unknown), 1);
    let empty_grid = run(&[
        "curve",
        "--verdicts",
        &format!("7B={}", v.display()),
        "--cost-model",
        cost_model().to_str().unwrap(),
        "--grid",
        "",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&empty_grid), 1);
}

#[test]
fn oracle_rank_curve_matches_pass_curve() {
    let dir = tempfile::tempdir().unwrap();
    let n = 16u32;
    let passes = [0u32, 3, 9, 16];
    let problems: Vec<_> = (0..passes.len())
        .map(|p| json!({"problem_id": format!("q{p}"), "benchmark": "full_program", "prompt": "", "test_payload": "pass"}))
        .collect();
    let mut gens = Vec::new();
    let mut scores = Vec::new();
    for p in 0..passes.len() {
        for i in 0..n {
            gens.push(json!({"problem_id": format!("q{p}"), "candidate_index": i, "text": "", "completed": true}));
            scores.push(json!({"problem_id": format!("q{p}"), "candidate_index": i, "score": f64::from((i * 7) % 5)}));
        }
    }
    let (pp, gp, sp, vp) = (
        dir.path().join("p.jsonl"),
        dir.path().join("g.jsonl"),
        dir.path().join("s.jsonl"),
        dir.path().join("v.jsonl"),
    );
    write_jsonl(&pp, &problems);
    write_jsonl(&gp, &gens);
    write_jsonl(&sp, &scores);
    verdict_file(&vp, n, &passes, None);

    let out = dir.path().join("out");
    let common = |cmd: &str| -> Vec<String> {
        vec![
            cmd.into(),
            "--verdicts".into(),
            format!("13B={}", vp.display()),
            "--cost-model".into(),
            cost_model().display().to_string(),
            "--budget-kind".into(),
            "time".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let pass = bin().args(common("curve")).output().unwrap();
    assert_eq!(code(&pass), 0, "{}", stderr(&pass));
    let mut rank_args = common("rank-curve");
    for extra in [
        "--problems",
        pp.to_str().unwrap(),
        "--generations",
        gp.to_str().unwrap(),
        "--scores",
        &format!("nll={}", sp.display()),
        "--policy",
        "oracle",
        "--policy",
        "anti-oracle",
        "--policy",
        "nll-score:nll",
        "--policy",
        "random",
        "--seed",
        "9",
    ] {
        rank_args.push(extra.to_string());
    }
    let rank = bin().args(&rank_args).output().unwrap();
    assert_eq!(code(&rank), 0, "{}", stderr(&rank));

    let grid_scores = |name: &str| -> Vec<f64> {
        read_curve(&out.join(name))
            .iter()
            .filter(|r| r[0] == "grid")
            .map(|r| r[3].parse().unwrap())
            .collect()
    };
    let unit = grid_scores("curve_13B_unit-test_time.csv");
    let oracle = grid_scores("curve_13B_oracle_time.csv");
    assert_eq!(unit.len(), oracle.len());
    for (a, b) in unit.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    let anti = grid_scores("curve_13B_anti-oracle_time.csv");
    for name in ["curve_13B_nll-score_nll_time.csv", "curve_13B_random_9_time.csv"] {
        for ((s, hi), lo) in grid_scores(name).iter().zip(&oracle).zip(&anti) {
            assert!(lo - 1e-9 <= *s && *s <= hi + 1e-9, "{name}: {s} not in [{lo}, {hi}]");
        }
    }

    // determinism: a rerun reproduces every file byte for byte
    let before = fs::read(out.join("curve_13B_random_9_time.csv")).unwrap();
    assert_eq!(code(&bin().args(&rank_args).output().unwrap()), 0);
    assert_eq!(fs::read(out.join("curve_13B_random_9_time.csv")).unwrap(), before);
}

#[test]
fn validate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (pp, gp) = mini_corpus(dir.path());
    let ok = run(&[
        "validate",
        "--problems",
        pp.to_str().unwrap(),
        "--generations",
        gp.to_str().unwrap(),
        "--cost-model",
        cost_model().to_str().unwrap(),
    ]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("all checks passed"));
    assert!(stdout(&ok).contains("200 cases"));

    let bad = dir.path().join("bad_cost.json");
    fs::write(
        &bad,
        r#"{"reference_model": "a", "a": {"flops_tera": 1.0, "time_seconds": 0}, "b": {"flops_tera": 2.0, "time_seconds": 3.0}}"#,
    )
    .unwrap();
    let o = run(&["validate", "--cost-model", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL  cost model: a: time_seconds must be > 0"), "{}", stdout(&o));
    assert!(!stdout(&o).contains("all checks passed"));
}
