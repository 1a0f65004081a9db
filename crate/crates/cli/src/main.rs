use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use gtr_core::corrector::{CorrectionRequest, CorrectorError, EpisodeContext};
use gtr_core::envs::{make_env, EnvConfig, Environment, Task};
use gtr_core::policy::{checkpoint, GenerationConfig};
use gtr_core::solver24::{find_formulas, CardValue, FormulaRules};
use gtr_core::trainer::{evaluate, Mode, RunConfig, TrainError, Trainer};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "gtr", version, about = "Train and inspect thought-guided RL agents on card and household tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the training loop until the step budget is spent.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        task: Option<Task>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume from this checkpoint instead of starting fresh.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        task: Task,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run config supplying environment and generation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for eval_report.json; defaults to the checkpoint's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every solution for a hand, or UNSOLVABLE.
    Solve {
        #[arg(long, default_value = "points24")]
        task: Task,
        cards: Vec<String>,
    },
    /// Step an environment from stdin, one action per line.
    Play {
        #[arg(long)]
        task: Task,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the configured corrector once on a fixture.
    Correct {
        #[arg(long)]
        task: Option<Task>,
        #[arg(long)]
        config: Option<PathBuf>,
        fixture: PathBuf,
    },
}

/// Exit 1: bad input or configuration. Exit 2: failure while running.
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::Checkpoint(_) => Failure::Input(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train {
            config,
            seed,
            mode,
            task,
            out,
            checkpoint,
        } => train(config, seed, mode, task, out, checkpoint),
        Command::Eval {
            checkpoint,
            task,
            episodes,
            seed,
            config,
            out,
        } => eval(&checkpoint, task, episodes, seed, config, out),
        Command::Solve { task, cards } => solve(task, &cards),
        Command::Play { task, seed } => play(task, seed),
        Command::Correct { task, config, fixture } => correct(task, config, &fixture),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Option<RunConfig>, Failure> {
    path.map(|p| RunConfig::load(p).map_err(input)).transpose()
}

fn train(
    config: Option<PathBuf>,
    seed: Option<u64>,
    mode: Option<Mode>,
    task: Option<Task>,
    out: Option<PathBuf>,
    ckpt: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = match load_config(config.as_deref())? {
        Some(c) => c,
        None => RunConfig::desk(
            task.unwrap_or(Task::Points24),
            mode.unwrap_or(Mode::Gtr),
            seed.unwrap_or(0),
        ),
    };
    if let Some(t) = task {
        if t != cfg.task {
            cfg.task = t;
            cfg.trainer.thought_coef = gtr_core::trainer::TrainerConfig::for_task(t).thought_coef;
        }
    }
    cfg.mode = mode.unwrap_or(cfg.mode);
    cfg.seed = seed.unwrap_or(cfg.seed);
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let mut trainer = match ckpt {
        Some(p) => Trainer::resume(cfg, &p)?,
        None => Trainer::new(cfg)?,
    };
    let summary = trainer.run()?;
    if let Some(row) = summary.rows.last() {
        println!(
            "{} env steps, {} episodes, success {:.3}, return {:.3}",
            row.env_step, row.episodes, row.success_rate, row.mean_return
        );
    }
    println!("run directory: {}", trainer.cfg.output_dir.display());
    Ok(())
}

fn eval(
    ckpt: &Path,
    task: Task,
    episodes: usize,
    seed: u64,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if episodes == 0 {
        return Err(input(anyhow!("--episodes must be at least 1")));
    }
    let (env, generation) = match load_config(config.as_deref())? {
        Some(c) => (c.env, c.generation),
        None => (EnvConfig::default(), GenerationConfig::default()),
    };
    let (params, _) = checkpoint::load(ckpt).map_err(input)?;
    let report = evaluate(&params, task, &env, &generation, episodes, seed)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
    println!("{text}");
    let dir = out.unwrap_or_else(|| ckpt.parent().map(Path::to_path_buf).unwrap_or_default());
    std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(dir.join("eval_report.json"), text + "\n"))
        .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(())
}

fn solve(task: Task, cards: &[String]) -> Result<(), Failure> {
    let rules = match task {
        Task::Points24 => FormulaRules::POINTS24,
        Task::Ezpoints => FormulaRules::EZPOINTS,
        other => return Err(input(anyhow!("{} has no formulas to solve", other.as_str()))),
    };
    let words: Vec<&str> = cards.iter().flat_map(|c| c.split_whitespace()).collect();
    if words.len() != rules.cards {
        return Err(input(anyhow!("expected {} cards, got {}", rules.cards, words.len())));
    }
    let mut values = Vec::new();
    for w in words {
        let rank: u8 = w.parse().with_context(|| format!("bad card {w:?}")).map_err(input)?;
        values.push(CardValue::new(rank).map_err(input)?.effective());
    }
    let found = find_formulas(&values, &rules);
    let mut stdout = io::stdout().lock();
    if found.is_empty() {
        writeln!(stdout, "UNSOLVABLE").ok();
    }
    for f in found {
        writeln!(stdout, "{f}").ok();
    }
    Ok(())
}

fn play(task: Task, seed: u64) -> Result<(), Failure> {
    let mut env = make_env(task, &EnvConfig::default());
    let obs = env.reset(seed);
    println!("{}", obs.prompt_text);
    let mut total = 0.0;
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Failure::Runtime(e.into()))?;
        let action = line.trim();
        if action.is_empty() {
            continue;
        }
        if action == "quit" {
            break;
        }
        if env.is_done() {
            println!("episode over; type quit");
            continue;
        }
        match env.step(action) {
            Ok(o) => {
                total += o.reward;
                let summary = serde_json::json!({
                    "reward": o.reward,
                    "done": o.done,
                    "truncated": o.truncated,
                    "info": o.info,
                });
                println!("{summary}");
                println!("{}", o.observation.prompt_text);
                if o.done {
                    println!("episode over: total reward {total}");
                }
            }
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}

/// An environment state reached by replaying `actions` after `reset(seed)`,
/// plus the thought to judge.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Fixture {
    task: Option<Task>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    actions: Vec<String>,
    thought: String,
    #[serde(default = "yes")]
    format_valid: bool,
}

fn yes() -> bool {
    true
}

fn correct(task: Option<Task>, config: Option<PathBuf>, path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| path.display().to_string())
        .map_err(input)?;
    let fx: Fixture = serde_json::from_str(&text).map_err(input)?;
    let task = task
        .or(fx.task)
        .ok_or_else(|| input(anyhow!("fixture names no task; pass --task")))?;
    let cfg = load_config(config.as_deref())?.unwrap_or_default();
    let corrector = cfg.corrector.build().map_err(corrector_failure)?;
    let mut env: Box<dyn Environment> = make_env(task, &cfg.env);
    env.reset(fx.seed);
    for a in &fx.actions {
        if env.is_done() {
            return Err(input(anyhow!("fixture replays past the end of the episode")));
        }
        env.step(a).map_err(input)?;
    }
    let request = CorrectionRequest {
        episode_id: 0,
        step: env.step_count(),
        observation: env.observation(),
        truth: env.ground_truth(),
        thought: fx.thought.split_whitespace().map(str::to_string).collect(),
        format_valid: fx.format_valid,
    };
    let outcome = corrector
        .correct(&request, &mut EpisodeContext::default())
        .map_err(corrector_failure)?;
    let json = serde_json::to_string_pretty(&outcome.response).map_err(|e| Failure::Runtime(e.into()))?;
    println!("{json}");
    if outcome.fallback_used {
        eprintln!("note: answered by the oracle fallback");
    }
    Ok(())
}

fn corrector_failure(e: CorrectorError) -> Failure {
    match e {
        CorrectorError::MissingApiKey(_) | CorrectorError::BadRequest(_) => input(e),
        _ => Failure::Runtime(e.into()),
    }
}
