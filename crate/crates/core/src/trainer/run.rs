use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Mode, TrainerConfig};
use super::gae::compute_gae;
use super::loss::{combined_loss, sft_loss, SftExample, ThoughtRecord, Transition};
use super::metrics::{discounted, metrics_update, EpisodeStats, MetricsRow, WindowStats, REPORT_GAMMA};
use super::optim::{clip_grad_norm, OptimizerState};
use super::TrainError;
use crate::corrector::{
    format_judge, oracle_correct, CorrectionLog, CorrectionRequest, Corrector, CorrectorConfig,
    EpisodeContext, Verdict,
};
use crate::envs::{make_env, EnvConfig, Environment, Task, TrajectoryRecord};
use crate::policy::{
    checkpoint, extract_for_env, observe, GenerationConfig, Grad, PolicyConfig, PolicyParams,
    Vocab, ACTION, ACTION_ID, EOS_ID, THOUGHT_ID,
};
use crate::seeding::SeedTree;

/// Pre-training on well-formed responses with filler reasoning and a
/// uniformly drawn legal action. Runs before any mode-specific training and
/// is identical across modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarmStartConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub max_filler: usize,
    /// Random legal moves played before sampling a training observation.
    pub max_prefix: usize,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            batch: 16,
            lr: 1.0,
            max_filler: 4,
            max_prefix: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub mode: Mode,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub trainer: TrainerConfig,
    pub generation: GenerationConfig,
    pub policy: PolicyConfig,
    pub env: EnvConfig,
    pub corrector: CorrectorConfig,
    pub warm_start: WarmStartConfig,
    pub write_trajectories: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Points24,
            mode: Mode::Gtr,
            seed: 0,
            output_dir: PathBuf::from("runs/default"),
            trainer: TrainerConfig::default(),
            generation: GenerationConfig::default(),
            policy: PolicyConfig::default(),
            env: EnvConfig::default(),
            corrector: CorrectorConfig::Oracle,
            warm_start: WarmStartConfig::default(),
            write_trajectories: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = fs::read_to_string(path)
            .map_err(|e| TrainError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = TrainError::Config;
        self.trainer.validate().map_err(bad)?;
        self.generation.validate().map_err(bad)?;
        if self.policy.buckets == 0 || self.policy.embed_dim == 0 {
            return Err(bad("policy buckets and embed_dim must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.env.misread_prob) {
            return Err(bad("misread_prob must be in [0, 1]".into()));
        }
        if let CorrectorConfig::Remote(e) = &self.corrector {
            e.validate().map_err(bad)?;
        }
        Ok(())
    }

    /// Settings that train the toy policy in minutes: a learning rate sized
    /// for the linear model, a slow decay and fewer, smaller optimizer
    /// windows.
    pub fn desk(task: Task, mode: Mode, seed: u64) -> Self {
        let mut trainer = TrainerConfig::for_task(task);
        trainer.lr_init = 0.05;
        trainer.lr_final = 0.005;
        trainer.lr_max_step = 1000;
        trainer.grad_accum_steps = 32;
        trainer.ppo_epochs = 2;
        Self {
            task,
            mode,
            seed,
            output_dir: PathBuf::from(format!("runs/{}_{}_{}", task.as_str(), mode, seed)),
            trainer,
            ..Self::default()
        }
    }

    pub fn seeds(&self) -> SeedTree {
        SeedTree::new(self.seed)
    }
}

/// Append-only store of corrected thoughts.
#[derive(Debug, Clone, Default)]
pub struct ThoughtDataset {
    records: Vec<ThoughtRecord>,
    examples: Vec<SftExample>,
}

impl ThoughtDataset {
    pub fn push(&mut self, record: ThoughtRecord) -> Result<(), TrainError> {
        self.examples.push(SftExample::from_record(&record)?);
        self.records.push(record);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.records.clear();
        self.examples.clear();
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ThoughtRecord] {
        &self.records
    }

    pub fn examples(&self) -> &[SftExample] {
        &self.examples
    }

    /// Uniform draw with replacement over every stored record.
    pub fn sample_indices(&self, k: usize, rng: &mut impl Rng) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        (0..k).map(|_| rng.random_range(0..self.len())).collect()
    }
}

/// Everything one collection phase produced.
#[derive(Debug, Default)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    pub records: Vec<ThoughtRecord>,
    pub episodes: Vec<EpisodeStats>,
    pub corrections: Vec<CorrectionLog>,
    pub trajectories: Vec<TrajectoryRecord>,
}

/// Plays whole episodes with `params` until at least `min_steps`
/// transitions are stored; the last episode always runs to its end.
/// Episode `k` draws its deal and its sampling stream from the seed tree
/// at index `first_episode + k`.
pub fn collect_rollouts(
    env: &mut dyn Environment,
    params: &PolicyParams,
    corrector: Option<&dyn Corrector>,
    cfg: &RunConfig,
    first_episode: u64,
    min_steps: usize,
) -> Result<Rollout, TrainError> {
    let mut out = Rollout::default();
    let mut id = first_episode;
    while out.transitions.len() < min_steps {
        run_episode(env, params, corrector, cfg, id, &mut out)?;
        id += 1;
    }
    Ok(out)
}

fn words_of(ids: &[usize]) -> Vec<String> {
    Vocab::global().decode(ids).into_iter().map(str::to_string).collect()
}

fn run_episode(
    env: &mut dyn Environment,
    params: &PolicyParams,
    corrector: Option<&dyn Corrector>,
    cfg: &RunConfig,
    episode_id: u64,
    out: &mut Rollout,
) -> Result<(), TrainError> {
    let tc = &cfg.trainer;
    let seeds = cfg.seeds();
    let mut rng = seeds.rng("sampling", episode_id);
    let mut obs = env.reset(seeds.indexed("env", episode_id));
    let mut ctx = EpisodeContext::default();
    let mut stats = EpisodeStats {
        episode_id,
        success: false,
        ret: 0.0,
        disc_return: 0.0,
        length: 0,
        truncated: env.is_truncated(),
        format_valid_steps: 0,
        first_thought: Vec::new(),
        thought_entropy: 0.0,
        agreement_steps: 0,
        judged_steps: 0,
    };
    let start = out.transitions.len();
    let mut env_rewards = Vec::new();
    while !env.is_done() {
        let step = env.step_count();
        let features = observe(&obs);
        let output = params.generate(&features, &cfg.generation, &mut rng);
        let all_words = words_of(&output.tokens);
        let (format_valid, bonus) = format_judge(&all_words, |w| env.parse_action(w), tc.format_reward);
        let extracted = extract_for_env(&output.tokens, env, &mut rng);
        let thought_words = words_of(output.thought());
        if stats.length == 0 {
            stats.first_thought = output.thought().to_vec();
            let seg = output.thought_segment();
            if !seg.is_empty() {
                let scores = params.score(&features, seg);
                stats.thought_entropy = scores.iter().map(|s| s.entropy).sum::<f64>() / seg.len() as f64;
            }
        }

        if let Some(corrector) = corrector {
            let request = CorrectionRequest {
                episode_id,
                step,
                observation: obs.clone(),
                truth: env.ground_truth(),
                thought: thought_words.clone(),
                format_valid,
            };
            let canonical = oracle_correct(&request.truth, &[] as &[&str], false, &mut ctx.clone())?
                .correction
                .map(|c| c.tokens);
            let clock = Instant::now();
            let outcome = corrector.correct(&request, &mut ctx)?;
            let latency = clock.elapsed().as_millis() as u64;
            stats.judged_steps += 1;
            if canonical.as_ref() == Some(&thought_words) {
                stats.agreement_steps += 1;
            }
            let target = match (&outcome.response.correction, outcome.response.evaluation) {
                (Some(c), _) => Some(c.tokens.clone()),
                (None, Verdict::Yes) => Some(thought_words.clone()),
                (None, Verdict::No) => None,
            };
            if let Some(mut thought) = target {
                thought.push(ACTION.into());
                out.records.push(ThoughtRecord {
                    iteration: 0,
                    episode_id,
                    step,
                    observation: obs.clone(),
                    thought,
                });
            }
            out.corrections.push(CorrectionLog::new(&request, &outcome, latency));
        }

        let logprob_old = output.combined_logprob(tc.thought_coef);
        let value_old = params.value(&features);
        let outcome = env.step(&extracted.action)?;
        let shaped = if cfg.mode.uses_corrector() { bonus } else { 0.0 };
        let bootstrap = if outcome.truncated {
            params.value(&observe(&outcome.observation))
        } else {
            0.0
        };
        if cfg.write_trajectories {
            out.trajectories.push(TrajectoryRecord {
                episode_id,
                step,
                task: cfg.task,
                obs_symbols: obs.symbols.clone(),
                prompt: obs.prompt_text.clone(),
                thought: thought_words.join(" "),
                action_tokens: words_of(output.action_segment()),
                extracted_action: extracted.action.clone(),
                reward: outcome.reward,
                done: outcome.done,
                truncated: outcome.truncated,
            });
        }
        env_rewards.push(outcome.reward);
        stats.length += 1;
        stats.format_valid_steps += usize::from(format_valid);
        stats.success = outcome.info.success;
        stats.truncated = outcome.truncated;
        out.transitions.push(Transition {
            episode_id,
            step,
            observation: obs,
            features,
            output,
            extracted_action: extracted.action,
            random_action: extracted.random,
            format_valid,
            logprob_old,
            value_old,
            reward: outcome.reward + shaped,
            done: outcome.done,
            truncated: outcome.truncated,
            bootstrap,
            advantage: 0.0,
            return_target: 0.0,
            params_version: params.version,
        });
        obs = outcome.observation;
    }

    let ep = &mut out.transitions[start..];
    if let Some(last) = ep.last() {
        let rewards: Vec<f64> = ep.iter().map(|t| t.reward).collect();
        let mut values: Vec<f64> = ep.iter().map(|t| t.value_old).collect();
        values.push(last.bootstrap);
        let dones: Vec<bool> = ep.iter().map(|t| t.done && !t.truncated).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, tc.gamma, tc.gae_lambda)
            .expect("episode arrays are aligned");
        for (t, (a, r)) in ep.iter_mut().zip(adv.into_iter().zip(ret)) {
            t.advantage = a;
            t.return_target = r;
        }
    }
    stats.ret = env_rewards.iter().sum();
    stats.disc_return = discounted(&env_rewards, REPORT_GAMMA);
    out.episodes.push(stats);
    Ok(())
}

/// Statistics of one parameter update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub optimizer_steps: u64,
    pub mean_loss: f64,
}

/// PPO and/or SFT epochs over the buffer. `dataset` is ignored in modes
/// without a corrector.
#[allow(clippy::too_many_arguments)]
pub fn update(
    params: &mut PolicyParams,
    opt: &mut OptimizerState,
    buffer: &mut [Transition],
    dataset: Option<&ThoughtDataset>,
    cfg: &TrainerConfig,
    mode: Mode,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats, TrainError> {
    let snapshot = params.version;
    assert!(
        buffer.iter().all(|t| t.params_version == snapshot),
        "buffer holds transitions from stale parameters"
    );
    let dataset = if mode.uses_corrector() { dataset } else { None };
    if mode.uses_ppo() && cfg.normalize_advantages && buffer.len() > 1 {
        let n = buffer.len() as f64;
        let mean = buffer.iter().map(|t| t.advantage).sum::<f64>() / n;
        let var = buffer.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt().max(1e-8);
        for t in buffer.iter_mut() {
            t.advantage = (t.advantage - mean) / std;
        }
    }
    let mut stats = UpdateStats::default();
    let mut losses = 0usize;
    let window = cfg.micro_batch * cfg.grad_accum_steps;
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..cfg.ppo_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(window) {
            let mut total = Grad::zeros(params);
            let mut parts = 0usize;
            for micro in chunk.chunks(cfg.micro_batch) {
                let batch: Vec<&Transition> = micro.iter().map(|&i| &buffer[i]).collect();
                let examples: Vec<&SftExample> = match dataset {
                    Some(d) => d
                        .sample_indices(cfg.dagger_batch, rng)
                        .into_iter()
                        .map(|i| &d.examples()[i])
                        .collect(),
                    None => Vec::new(),
                };
                let (loss, grad) = combined_loss(mode, &batch, &examples, params, cfg)?;
                stats.mean_loss += loss;
                losses += 1;
                total.add_scaled(&grad, 1.0);
                parts += 1;
            }
            total.scale(1.0 / parts as f64);
            clip_grad_norm(&mut total, cfg.max_grad_norm);
            opt.step(params, &total, lr);
            stats.optimizer_steps += 1;
        }
    }
    if losses > 0 {
        stats.mean_loss /= losses as f64;
    }
    if !params.is_finite() {
        return Err(TrainError::NonFinite("parameters diverged".into()));
    }
    Ok(stats)
}

/// The format-prior pre-training described on [`WarmStartConfig`].
pub fn warm_start(params: &mut PolicyParams, cfg: &RunConfig) -> Result<(), TrainError> {
    let ws = &cfg.warm_start;
    let seeds = cfg.seeds();
    let mut env = make_env(cfg.task, &cfg.env);
    let mut rng = seeds.rng("warm_start", 0);
    let vocab = Vocab::global();
    let filler = vocab.filler_ids();
    let mut drawn = 0u64;
    for _ in 0..ws.steps {
        let mut batch = Vec::with_capacity(ws.batch);
        while batch.len() < ws.batch {
            let mut obs = env.reset(seeds.indexed("warm_env", drawn));
            drawn += 1;
            for _ in 0..rng.random_range(0..=ws.max_prefix) {
                if env.is_done() {
                    break;
                }
                let a = env.legal_actions().choose(&mut rng).cloned().expect("legal set");
                obs = env.step(&a)?.observation;
            }
            if env.is_done() {
                continue;
            }
            let action = env.legal_actions().choose(&mut rng).cloned().expect("legal set");
            let mut tokens = vec![THOUGHT_ID];
            for _ in 0..rng.random_range(1..=ws.max_filler.max(1)) {
                tokens.push(*filler.choose(&mut rng).expect("filler words"));
            }
            tokens.push(ACTION_ID);
            tokens.extend(vocab.encode_text(&action)?);
            tokens.push(EOS_ID);
            batch.push(SftExample {
                features: observe(&obs),
                tokens,
            });
        }
        let refs: Vec<&SftExample> = batch.iter().collect();
        let (_, grad) = sft_loss(&refs, params)?;
        params.apply_step(&grad, ws.lr);
    }
    Ok(())
}

/// Progress marker stored beside each checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunState {
    pub env_step: u64,
    pub iteration: u64,
    pub episodes: u64,
}

fn state_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("state.json")
}

/// Results kept in memory for callers that drive training directly.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeStats>,
    pub env_step: u64,
    pub iterations: u64,
}

impl RunSummary {
    /// Statistics over the last `n` episodes.
    pub fn tail(&self, n: usize) -> Option<WindowStats> {
        let start = self.episodes.len().saturating_sub(n);
        metrics_update(&self.episodes[start..])
    }

    pub fn head(&self, n: usize) -> Option<WindowStats> {
        metrics_update(&self.episodes[..n.min(self.episodes.len())])
    }
}

pub struct Trainer {
    pub cfg: RunConfig,
    pub params: PolicyParams,
    pub dataset: ThoughtDataset,
    pub env_step: u64,
    pub iteration: u64,
    pub episodes: u64,
    opt: OptimizerState,
    corrector: Option<Box<dyn Corrector>>,
    env: Box<dyn Environment>,
    summary: RunSummary,
}

fn append(path: &Path) -> Result<BufWriter<File>, TrainError> {
    Ok(BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), TrainError> {
    if items.is_empty() {
        return Ok(());
    }
    let mut w = append(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

const METRICS_HEADER: &str = "env_step,episodes,success_rate,mean_return,disc_return,ep_len,format_rate,thought_diversity,token_entropy,lr,mode,seed";

impl Trainer {
    /// Fresh run: initialise, warm start, and lay out the run directory.
    pub fn new(cfg: RunConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut params = PolicyParams::init(cfg.policy.clone(), cfg.seeds().stream("policy_init"));
        warm_start(&mut params, &cfg)?;
        let t = Self::assemble(cfg, params)?;
        let dir = &t.cfg.output_dir;
        fs::create_dir_all(dir.join("checkpoints"))?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&t.cfg)?)?;
        fs::write(dir.join("metrics.csv"), format!("{METRICS_HEADER}\n"))?;
        for name in ["trajectories.jsonl", "corrections.jsonl", "dataset.jsonl", "episodes.jsonl"] {
            let p = dir.join(name);
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
        Ok(t)
    }

    fn assemble(cfg: RunConfig, params: PolicyParams) -> Result<Self, TrainError> {
        let corrector = if cfg.mode.uses_corrector() {
            Some(cfg.corrector.build()?)
        } else {
            None
        };
        Ok(Self {
            opt: OptimizerState::new(cfg.trainer.optimizer),
            env: make_env(cfg.task, &cfg.env),
            corrector,
            params,
            dataset: ThoughtDataset::default(),
            env_step: 0,
            iteration: 0,
            episodes: 0,
            summary: RunSummary::default(),
            cfg,
        })
    }

    /// Continues a run from one of its checkpoints. Files in the run
    /// directory are cut back to the checkpoint; optimizer moments restart.
    pub fn resume(cfg: RunConfig, ckpt: &Path) -> Result<Self, TrainError> {
        cfg.validate()?;
        let (params, header) = checkpoint::load(ckpt)?;
        if header.config != cfg.policy {
            return Err(TrainError::Config("checkpoint policy config differs from the run config".into()));
        }
        let state: RunState = match fs::read_to_string(state_path(ckpt)) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => RunState {
                env_step: header.env_step,
                iteration: header.iteration,
                episodes: header.env_step,
            },
        };
        let mut t = Self::assemble(cfg, params)?;
        t.env_step = state.env_step;
        t.iteration = state.iteration;
        t.episodes = state.episodes;
        let dir = t.cfg.output_dir.clone();
        fs::create_dir_all(dir.join("checkpoints"))?;

        let data_path = dir.join("dataset.jsonl");
        let mut kept = Vec::new();
        if data_path.exists() {
            for line in BufReader::new(File::open(&data_path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: ThoughtRecord = serde_json::from_str(&line)?;
                let keep = if t.cfg.trainer.dagger_aggregate {
                    r.iteration < state.iteration
                } else {
                    r.iteration + 1 == state.iteration
                };
                if keep {
                    kept.push(r);
                }
            }
            fs::remove_file(&data_path)?;
        }
        write_jsonl(&data_path, &kept)?;
        for r in kept {
            t.dataset.push(r)?;
        }

        let episodes_path = dir.join("episodes.jsonl");
        let mut history = Vec::new();
        if episodes_path.exists() {
            for line in fs::read_to_string(&episodes_path)?.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                let e: EpisodeStats = serde_json::from_str(line)?;
                if e.episode_id < state.episodes {
                    history.push(e);
                }
            }
            fs::remove_file(&episodes_path)?;
        }
        write_jsonl(&episodes_path, &history)?;
        t.summary.episodes = history;

        let metrics = dir.join("metrics.csv");
        let mut lines = vec![METRICS_HEADER.to_string()];
        if metrics.exists() {
            for line in fs::read_to_string(&metrics)?.lines().skip(1) {
                let step: u64 = line.split(',').next().and_then(|s| s.parse().ok()).unwrap_or(u64::MAX);
                if step <= state.env_step {
                    lines.push(line.to_string());
                }
            }
        }
        fs::write(&metrics, lines.join("\n") + "\n")?;
        Ok(t)
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }

    pub fn is_finished(&self) -> bool {
        self.env_step >= self.cfg.trainer.total_env_steps
    }

    /// One outer iteration: collect, aggregate, update, log.
    pub fn iterate(&mut self) -> Result<(), TrainError> {
        let tc = self.cfg.trainer.clone();
        let lr = tc.lr_at(self.iteration);
        let remaining = tc.total_env_steps.saturating_sub(self.env_step) as usize;
        let mut roll = collect_rollouts(
            self.env.as_mut(),
            &self.params,
            self.corrector.as_deref(),
            &self.cfg,
            self.episodes,
            tc.buffer_size.min(remaining.max(1)),
        )?;
        self.episodes += roll.episodes.len() as u64;
        self.env_step += roll.transitions.len() as u64;

        if !tc.dagger_aggregate {
            self.dataset.clear();
        }
        for r in &mut roll.records {
            r.iteration = self.iteration;
        }
        let dir = self.cfg.output_dir.clone();
        write_jsonl(&dir.join("dataset.jsonl"), &roll.records)?;
        write_jsonl(&dir.join("corrections.jsonl"), &roll.corrections)?;
        write_jsonl(&dir.join("trajectories.jsonl"), &roll.trajectories)?;
        write_jsonl(&dir.join("episodes.jsonl"), &roll.episodes)?;
        for r in roll.records {
            self.dataset.push(r)?;
        }

        let mut rng = self.cfg.seeds().rng("update", self.iteration);
        update(
            &mut self.params,
            &mut self.opt,
            &mut roll.transitions,
            Some(&self.dataset),
            &tc,
            self.cfg.mode,
            lr,
            &mut rng,
        )?;
        self.iteration += 1;

        self.summary.episodes.extend(roll.episodes);
        let eps = &self.summary.episodes;
        let start = eps.len().saturating_sub(tc.metrics_window);
        if let Some(w) = metrics_update(&eps[start..]) {
            let row = MetricsRow {
                env_step: self.env_step,
                episodes: self.episodes,
                success_rate: w.success_rate,
                mean_return: w.mean_return,
                disc_return: w.disc_return,
                ep_len: w.ep_len,
                format_rate: w.format_rate,
                thought_diversity: w.thought_diversity,
                token_entropy: w.token_entropy,
                lr,
                mode: self.cfg.mode,
                seed: self.cfg.seed,
            };
            let mut csv = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(append(&dir.join("metrics.csv"))?);
            csv.serialize(&row)?;
            csv.flush()?;
            self.summary.rows.push(row);
        }
        self.summary.env_step = self.env_step;
        self.summary.iterations = self.iteration;

        if tc.checkpoint_every > 0 && self.iteration.is_multiple_of(tc.checkpoint_every) {
            self.checkpoint()?;
        }
        Ok(())
    }

    /// Writes `checkpoints/ckpt_<env_step>.json` and its progress marker.
    pub fn checkpoint(&self) -> Result<PathBuf, TrainError> {
        let path = self
            .cfg
            .output_dir
            .join("checkpoints")
            .join(format!("ckpt_{}.json", self.env_step));
        checkpoint::save(&path, &self.params, self.env_step, self.iteration)?;
        let state = RunState {
            env_step: self.env_step,
            iteration: self.iteration,
            episodes: self.episodes,
        };
        fs::write(state_path(&path), serde_json::to_string(&state)?)?;
        Ok(path)
    }

    /// Trains until the step budget is spent, then writes a final
    /// checkpoint.
    pub fn run(&mut self) -> Result<RunSummary, TrainError> {
        while !self.is_finished() {
            self.iterate()?;
        }
        self.checkpoint()?;
        Ok(self.summary.clone())
    }
}

/// Greedy evaluation without learning or correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    pub mean_disc_return: f64,
    pub format_rate: f64,
    pub thought_diversity: f64,
}

pub fn evaluate(
    params: &PolicyParams,
    task: Task,
    env_cfg: &EnvConfig,
    generation: &GenerationConfig,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport, TrainError> {
    if episodes == 0 {
        return Err(TrainError::Config("evaluation needs at least one episode".into()));
    }
    let cfg = RunConfig {
        task,
        mode: Mode::Rl4vlm,
        seed,
        env: env_cfg.clone(),
        generation: GenerationConfig {
            greedy: true,
            ..generation.clone()
        },
        write_trajectories: false,
        ..RunConfig::default()
    };
    let mut env = make_env(task, env_cfg);
    let mut roll = Rollout::default();
    for id in 0..episodes as u64 {
        run_episode(env.as_mut(), params, None, &cfg, id, &mut roll)?;
    }
    let w = metrics_update(&roll.episodes).expect("at least one episode");
    Ok(EvalReport {
        task,
        episodes,
        success_rate: w.success_rate,
        mean_return: w.mean_return,
        mean_disc_return: w.disc_return,
        format_rate: w.format_rate,
        thought_diversity: w.thought_diversity,
    })
}
