use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::thread;

use gtr_core::corrector::{oracle_correct, EpisodeContext};
use gtr_core::envs::{make_env, EnvConfig, GroundTruth, Task};
use gtr_core::policy::{checkpoint, PolicyConfig, PolicyParams};
use gtr_core::seeding::rng_from_seed;
use gtr_core::solver24::{find_formulas, FormulaRules};
use rand::seq::IndexedRandom;
use serde_json::{json, Value};

fn gtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtr")).args(args).output().unwrap()
}

fn gtr_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gtr"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_run_config(dir: &Path, mode: &str) -> String {
    json!({
        "task": "ezpoints",
        "mode": mode,
        "seed": 3,
        "output_dir": dir,
        "policy": {"buckets": 512, "embed_dim": 4, "decay": 0.6, "window": 4, "init_scale": 0.3},
        "warm_start": {"steps": 10},
        "trainer": {"buffer_size": 64, "grad_accum_steps": 8, "total_env_steps": 200,
                    "lr_init": 0.05, "lr_final": 0.005, "checkpoint_every": 1}
    })
    .to_string()
}

#[test]
fn solve_lists_solutions_in_order() {
    let o = gtr(&["solve", "2", "3", "4", "1"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(lines.contains(&"2*3*4*1".to_string()));
    let mut sorted = lines.clone();
    sorted.sort();
    assert_eq!(lines, sorted);
    assert_eq!(stdout(&gtr(&["solve", "1 1 1 1"])).trim(), "UNSOLVABLE");
}

#[test]
fn solve_treats_faces_as_ten() {
    let faces = gtr(&["solve", "11", "12", "13", "2"]);
    assert!(faces.status.success());
    assert_eq!(stdout(&faces), stdout(&gtr(&["solve", "10", "10", "10", "2"])));
    assert_eq!(stdout(&gtr(&["solve", "--task", "ezpoints", "13", "2"])), "10+2\n2+10\n");
}

#[test]
fn solve_rejects_malformed_hands() {
    for args in [&["solve", "2", "3", "4"][..], &["solve", "2", "3", "4", "x"], &["solve", "0", "3", "4", "5"]] {
        assert_eq!(gtr(args).status.code(), Some(1), "{args:?}");
    }
}

fn ezpoints_deal(seed: u64) -> Vec<u8> {
    let mut env = make_env(Task::Ezpoints, &EnvConfig::default());
    env.reset(seed);
    match env.ground_truth() {
        GroundTruth::Cards { values, .. } => values,
        _ => unreachable!(),
    }
}

#[test]
fn play_scripted_win() {
    let seed = (0..100).find(|&s| !find_formulas(&ezpoints_deal(s), &FormulaRules::EZPOINTS).is_empty()).unwrap();
    let f = &find_formulas(&ezpoints_deal(seed), &FormulaRules::EZPOINTS)[0];
    let mut script: Vec<String> = f.token_strings();
    script.push("=".into());
    let o = gtr_stdin(&["play", "--task", "ezpoints", "--seed", &seed.to_string()], &(script.join("\n") + "\n"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("episode over: total reward 10"), "{}", stdout(&o));
}

#[test]
fn play_illegal_and_unknown_actions() {
    let values = ezpoints_deal(0);
    let absent = (1..=10u8).find(|v| !values.contains(v)).unwrap();
    let o = gtr_stdin(&["play", "--task", "ezpoints"], &format!("banana\n{absent}\nquit\n"));
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("rejected"), "{out}");
    let step: Value = serde_json::from_str(out.lines().find(|l| l.starts_with('{')).unwrap()).unwrap();
    assert_eq!(step["reward"], json!(-1.0));
    assert_eq!(step["info"]["legal"], json!(false));
    // The prompt after the illegal move is the opening prompt.
    let first_prompt: Vec<&str> = out.lines().take_while(|l| !l.starts_with("rejected")).collect();
    assert!(out.matches(first_prompt.join("\n").as_str()).count() >= 2);
}

#[test]
fn train_twice_gives_identical_metrics_and_resume_continues() {
    let base = tempfile::tempdir().unwrap();
    let mut metrics = Vec::new();
    for name in ["a", "b"] {
        let dir = base.path().join(name);
        let cfg = base.path().join(format!("{name}.json"));
        std::fs::write(&cfg, small_run_config(&dir, "gtr")).unwrap();
        let o = gtr(&["train", "--config", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        metrics.push(std::fs::read(dir.join("metrics.csv")).unwrap());
        assert!(dir.join("corrections.jsonl").exists());
    }
    assert_eq!(metrics[0], metrics[1]);

    let dir = base.path().join("a");
    let ckpt = std::fs::read_dir(dir.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".json") && !p.to_string_lossy().ends_with("state.json"))
        .min_by_key(|p| {
            let s = p.file_stem().unwrap().to_string_lossy().to_string();
            s.trim_start_matches("ckpt_").parse::<u64>().unwrap()
        })
        .unwrap();
    let o = gtr(&["train", "--config", base.path().join("a.json").to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let steps: Vec<u64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(steps.windows(2).all(|w| w[0] < w[1]), "{steps:?}");
    assert_eq!(csv.as_bytes(), metrics[0].as_slice());
}

#[test]
fn train_rl4vlm_writes_no_corrections() {
    let base = tempfile::tempdir().unwrap();
    let dir = base.path().join("run");
    let cfg = base.path().join("c.json");
    std::fs::write(&cfg, small_run_config(&dir, "gtr")).unwrap();
    let o = gtr(&["train", "--config", cfg.to_str().unwrap(), "--mode", "rl4vlm"]);
    assert!(o.status.success());
    assert!(dir.join("metrics.csv").exists());
    assert!(!dir.join("corrections.jsonl").exists());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved["mode"], json!("rl4vlm"));
}

#[test]
fn train_rejects_bad_configs() {
    let base = tempfile::tempdir().unwrap();
    let cfg = base.path().join("c.json");
    std::fs::write(&cfg, r#"{"task": "ezpoints", "learning_rate": 3}"#).unwrap();
    assert_eq!(gtr(&["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(gtr(&["train", "--config", "/nonexistent/c.json"]).status.code(), Some(1));
    assert_eq!(gtr(&["train", "--mode", "ppo"]).status.code(), Some(1));
    assert_eq!(gtr(&["--help"]).status.code(), Some(0));
}

/// Success rate of a uniformly random legal policy.
fn uniform_success(task: Task, episodes: u64) -> f64 {
    let mut env = make_env(task, &EnvConfig::default());
    let mut rng = rng_from_seed(99);
    let mut wins = 0;
    for s in 0..episodes {
        env.reset(10_000 + s);
        let mut won = false;
        while !env.is_done() {
            let a = env.legal_actions().choose(&mut rng).unwrap().clone();
            won = env.step(&a).unwrap().info.success;
        }
        wins += u64::from(won);
    }
    wins as f64 / episodes as f64
}

#[test]
fn eval_random_checkpoint_matches_uniform_policy() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("init.json");
    checkpoint::save(&ckpt, &PolicyParams::init(PolicyConfig::default(), 0), 0, 0).unwrap();
    let args = ["eval", "--checkpoint", ckpt.to_str().unwrap(), "--task", "numberline", "--episodes", "200", "--seed", "4"];
    let o = gtr(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sr = report["success_rate"].as_f64().unwrap();
    let oracle = uniform_success(Task::Numberline, 4000);
    // Binomial standard error at n = 200 is at most 0.036.
    assert!((sr - oracle).abs() < 0.11, "{sr} vs {oracle}");
    for key in ["success_rate", "mean_return", "mean_disc_return", "format_rate", "thought_diversity"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert!(dir.path().join("eval_report.json").exists());
    assert_eq!(stdout(&gtr(&args)), stdout(&o));
}

#[test]
fn eval_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("init.json");
    checkpoint::save(&ckpt, &PolicyParams::init(PolicyConfig::default(), 0), 0, 0).unwrap();
    let c = ckpt.to_str().unwrap();
    assert_eq!(gtr(&["eval", "--checkpoint", c, "--task", "blackjack", "--episodes", "0"]).status.code(), Some(1));
    let broken = dir.path().join("broken.json");
    let mut text: Value = serde_json::from_str(&std::fs::read_to_string(&ckpt).unwrap()).unwrap();
    text["header"]["vocab_hash"] = json!("0000");
    std::fs::write(&broken, text.to_string()).unwrap();
    assert_eq!(gtr(&["eval", "--checkpoint", broken.to_str().unwrap(), "--task", "blackjack"]).status.code(), Some(1));
}

fn canonical_thought(task: Task, seed: u64) -> String {
    let mut env = make_env(task, &EnvConfig::default());
    env.reset(seed);
    let r = oracle_correct(&env.ground_truth(), &[] as &[&str], false, &mut EpisodeContext::default()).unwrap();
    r.correction.unwrap().tokens.join(" ")
}

fn correct(fixture: &Value, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fx.json");
    std::fs::write(&path, fixture.to_string()).unwrap();
    let mut args = vec!["correct", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gtr"));
    cmd.args(&args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn correct_judges_fixtures() {
    let good = json!({"task": "points24", "seed": 5, "thought": canonical_thought(Task::Points24, 5)});
    let o = correct(&good, &[], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["evaluation"], json!("YES"));

    let wrong = json!({"task": "points24", "seed": 5, "thought": "thought: cards are 1 1 1 1 ; formula none ; next ="});
    let r: Value = serde_json::from_str(&stdout(&correct(&wrong, &[], &[]))).unwrap();
    assert_eq!(r["evaluation"], json!("NO"));
    assert!(r["correction"].is_object());

    let blackjack = json!({"seed": 1, "thought": "thought: player 2 ; next stand"});
    let o = correct(&blackjack, &["--task", "blackjack"], &[]);
    assert!(o.status.success());
    assert_eq!(correct(&json!({"thought": "x"}), &[], &[]).status.code(), Some(1));
}

fn serve_once(body: String) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap();
                }
            }
        }
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let head = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            body.len()
        );
        stream.write_all(head.as_bytes()).unwrap();
        stream.write_all(body.as_bytes()).unwrap();
    });
    url
}

#[test]
fn correct_remote_matches_oracle_schema() {
    let fixture = json!({"task": "points24", "seed": 8, "thought": "thought: cards are 1 2 3 4 ; formula none ; next ="});
    let oracle = correct(&fixture, &[], &[]);
    assert!(oracle.status.success());
    let oracle_json = stdout(&oracle);
    let reply = json!({"choices": [{"message": {"role": "assistant", "content": oracle_json}}]});
    let url = serve_once(reply.to_string());

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("remote.json");
    let config = json!({"corrector": {"kind": "remote", "base_url": url, "model_name": "stub",
                                      "api_key_env": "GTR_CLI_TEST_KEY", "timeout_secs": 10.0}});
    std::fs::write(&cfg, config.to_string()).unwrap();
    let remote = correct(&fixture, &["--config", cfg.to_str().unwrap()], &[("GTR_CLI_TEST_KEY", "k")]);
    assert!(remote.status.success(), "{}", String::from_utf8_lossy(&remote.stderr));
    let a: Value = serde_json::from_str(&oracle_json).unwrap();
    let b: Value = serde_json::from_str(&stdout(&remote)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn correct_reports_endpoint_failure_with_exit_two() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("remote.json");
    let config = json!({"corrector": {"kind": "remote", "base_url": format!("http://127.0.0.1:{port}/v1"),
                                      "model_name": "stub", "api_key_env": "GTR_CLI_TEST_KEY",
                                      "max_retries": 0, "fallback": false, "timeout_secs": 2.0}});
    std::fs::write(&cfg, config.to_string()).unwrap();
    let fixture = json!({"task": "points24", "seed": 8, "thought": "thought: next ="});
    let o = correct(&fixture, &["--config", cfg.to_str().unwrap()], &[("GTR_CLI_TEST_KEY", "k")]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = correct(&fixture, &["--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = gtr_core::trainer::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.output_dir.starts_with("runs"), "{}", path.display());
        n += 1;
    }
    assert!(n >= 4);
}
