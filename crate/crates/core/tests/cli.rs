use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use minimax_infer::cli::{parse_config_str, run_command, Command, RunConfig, RunOptions};
use minimax_infer::Error;

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_minimax-infer"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn pointer_of(text: &str) -> String {
    match parse_config_str(text) {
        Err(Error::Config { pointer, .. }) => pointer,
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn minimal_config_fills_defaults() {
    let c = parse_config_str(r#"{"problem": "smooth_saddle", "command": "solve", "N": 1000, "seed": 1}"#).unwrap();
    assert_eq!(c.n, Some(1000));
    assert_eq!(c.r, 1000);
    assert_eq!(c.s, 100_000);
    assert_eq!(c.t_grid, vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3]);
    assert_eq!(c.thresholds.ks_max, 0.06);
    assert_eq!(c.solver.grid_per_dim, 9);
}

#[test]
fn config_errors_carry_json_pointers() {
    assert_eq!(pointer_of(r#"{"problem": "smooth_saddle", "gamma_grid_sz": 3}"#), "/gamma_grid_sz");
    assert_eq!(pointer_of(r#"{"problem": "cone_qp", "solver": {"max_newton": "many"}}"#), "/solver/max_newton");
    assert_eq!(pointer_of(r#"{"problem": "cone_qp", "thresholds": {"ks": 0.1}}"#), "/thresholds/ks");
    assert_eq!(pointer_of(r#"{"problem": "cone_qp", "R": 0}"#), "/R");
    assert_eq!(pointer_of(r#"{"problem": "cone_qp", "t_grid": [0.1, 0.2]}"#), "/t_grid");
    assert_eq!(
        pointer_of(r#"{"problem": {"n": 1, "m": 0, "d": 0, "gamma_box": {"lower": [0], "upper": [1]},
                     "xi_set": {"finite": [{"label": "a"}]}, "terms": [{"coef": 1, "gama_pow": [1]}]}}"#),
        "/problem/terms/0/gama_pow"
    );
    assert_eq!(pointer_of(r#"{"N": 3}"#), "/");
    assert_eq!(pointer_of("{not json"), "/");
}

#[test]
fn config_round_trips() {
    let c = parse_config_str(r#"{"problem": "ridge2d", "R": 7, "eta": [{"coef": 2.0, "gamma_pow": [1, 0]}]}"#).unwrap();
    let text = serde_json::to_string(&c).unwrap();
    let back: RunConfig = parse_config_str(&text).unwrap();
    assert_eq!(c, back);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "good.json", r#"{"problem": "smooth_saddle", "N": 200, "seed": 1}"#);
    let bad = write(tmp.path(), "bad.json", r#"{"problem": "smooth_saddle", "gamma_grid_sz": 3}"#);
    let unknown = write(tmp.path(), "unk.json", r#"{"problem": "nope"}"#);
    let boundary = write(tmp.path(), "bd.json", r#"{"problem": "smooth_saddle(2.5)", "gamma_star": [1.0]}"#);
    let out = tmp.path().join("run");

    let st = bin().args(["solve", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    assert!(out.join("solution.json").exists() && out.join("runlog.json").exists());
    // Existing directory without --force.
    let st = bin().args(["solve", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["solve", "--force", "--threads", "2", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(0));

    let run = |cmd: &str, cfg: &Path, name: &str| {
        bin().args([cmd, "--config"]).arg(cfg).arg("--out").arg(tmp.path().join(name)).output().unwrap()
    };
    let o = run("solve", &bad, "b");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/gamma_grid_sz"));
    assert_eq!(run("solve", &unknown, "u").status.code(), Some(2));
    // Active point on the boundary of Ξ: an assumption failure.
    assert_eq!(run("reduce", &boundary, "bd").status.code(), Some(1));
    assert!(!tmp.path().join("bd").exists());
    assert_eq!(run("frobnicate", &good, "f").status.code(), Some(2));
    let missing = tmp.path().join("missing.json");
    assert_eq!(run("solve", &missing, "m").status.code(), Some(2));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn failed_runs_leave_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(r#"{"problem": "smooth_saddle(2.5)", "gamma_star": [1.0]}"#).unwrap();
    let out = tmp.path().join("x");
    let opts = RunOptions { out: Some(out.clone()), threads: Some(1), force: false };
    assert!(run_command(Command::Reduce, &cfg, &opts).is_err());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn command_mismatch_is_a_config_error() {
    let cfg = parse_config_str(r#"{"problem": "cone_qp", "command": "solve"}"#).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(tmp.path().join("o")), threads: None, force: false };
    let e = run_command(Command::Reduce, &cfg, &opts).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "runlog.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        (Command::Solve, r#"{"problem": "vee_value", "N": 300, "seed": 4}"#),
        (Command::Reduce, r#"{"problem": "ridge2d"}"#),
        (Command::Limit, r#"{"problem": "cone_qp", "S": 5000}"#),
        (Command::ValueDeriv, r#"{"problem": "paper_example", "eta": [{"coef": 1.0, "branch": 0}]}"#),
    ];
    for (i, (cmd, text)) in configs.iter().enumerate() {
        let cfg = parse_config_str(text).unwrap();
        let a = run_command(*cmd, &cfg, &RunOptions { out: Some(tmp.path().join(format!("a{i}"))), threads: Some(1), force: false }).unwrap();
        let b = run_command(*cmd, &cfg, &RunOptions { out: Some(tmp.path().join(format!("b{i}"))), threads: Some(4), force: false }).unwrap();
        assert_eq!(artifacts(&a), artifacts(&b), "{text}");
    }
}

#[test]
fn subcommand_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let go = |cmd: Command, text: &str, name: &str| {
        let cfg = parse_config_str(text).unwrap();
        run_command(cmd, &cfg, &RunOptions { out: Some(tmp.path().join(name)), threads: None, force: false }).unwrap()
    };
    let d = go(Command::ValueDeriv, r#"{"problem": "paper_example", "eta": [{"coef": 1.0, "branch": 0}]}"#, "vd");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("value-deriv.json")).unwrap()).unwrap();
    assert_eq!(v["formula"]["minsup"], 1.0);
    assert!((v["formula"]["weighted"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert!((v["finite_difference"]["estimate"].as_f64().unwrap() - 0.5).abs() <= 1e-9);

    let d = go(Command::Reduce, r#"{"problem": "cone_qp"}"#, "rd");
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("certificates.json")).unwrap()).unwrap();
    let sc = c["items"].as_array().unwrap().iter().find(|i| i["name"] == "strict_complementarity").unwrap();
    assert_eq!(sc["pass"], false);
    assert!(fs::read_to_string(d.join("certificates.txt")).unwrap().contains("strict_complementarity"));

    let d = go(Command::Limit, r#"{"problem": "ridge2d", "S": 100, "formats": ["csv"]}"#, "lm");
    let csv = fs::read_to_string(d.join("solution-draws.csv")).unwrap();
    assert!(csv.starts_with("s,eta1,eta2\n"));
    assert_eq!(csv.lines().count(), 101);
    assert!(d.join("value-draws.csv").exists());
    assert!(!d.join("limit-model.json").exists());
    assert!(d.join("effective-config.json").exists());

    let d = go(Command::Validate, r#"{"problem": "ridge2d", "N": 500, "R": 50, "S": 2000}"#, "va");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["l_dim"], 1);
    assert!(r["gated"]["items"].as_array().unwrap().iter().any(|i| i["name"] == "L_1"));
    assert!(fs::read_to_string(d.join("replications.csv")).unwrap().starts_with("r,status,sqrtN_value_err,sqrtN_gamma_err_1,"));

    let input = tmp.path().join("va").display().to_string();
    let d = go(Command::Report, &format!(r#"{{"problem": "ridge2d", "input": {input:?}}}"#), "rp");
    assert!(fs::read_to_string(d.join("report.txt")).unwrap().contains("[gated]"));
}

#[test]
fn inline_problem_runs_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"problem": {"name": "quad", "n": 1, "m": 1, "d": 1,
        "gamma_box": {"lower": [-1], "upper": [1]}, "xi_set": {"box": {"lower": [-1], "upper": [1]}},
        "terms": [{"coef": 1.0, "gamma_pow": [2]}, {"coef": -1.0, "xi_pow": [2]}, {"coef": 1.0, "gamma_pow": [1], "x": 0}]},
        "N": 100}"#;
    let cfg = parse_config_str(text).unwrap();
    let d = run_command(Command::Solve, &cfg, &RunOptions { out: Some(tmp.path().join("s")), threads: None, force: false }).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("solution.json")).unwrap()).unwrap();
    assert_eq!(v["problem"], "quad");
    assert!(v["sample"]["gamma_hat"][0].as_f64().is_some());
}
