use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// PPO on environment reward plus cloning of corrected thoughts.
    Gtr,
    /// PPO on environment reward only.
    Rl4vlm,
    /// Cloning of corrected thoughts only.
    SftOnly,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Gtr, Mode::Rl4vlm, Mode::SftOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gtr => "gtr",
            Mode::Rl4vlm => "rl4vlm",
            Mode::SftOnly => "sft_only",
        }
    }

    pub fn uses_ppo(self) -> bool {
        self != Mode::SftOnly
    }

    pub fn uses_corrector(self) -> bool {
        self != Mode::Rl4vlm
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_c: f64,
    pub entropy_coef: f64,
    /// Include thought tokens in the entropy bonus.
    pub entropy_on_thought: bool,
    pub value_coef: f64,
    pub ppo_epochs: usize,
    /// Micro-batches summed into one optimizer step.
    pub grad_accum_steps: usize,
    /// Transitions per micro-batch.
    pub micro_batch: usize,
    /// Minimum transitions collected per outer iteration.
    pub buffer_size: usize,
    /// Thought records sampled per micro-batch.
    pub dagger_batch: usize,
    /// Keep corrections from every iteration; false keeps only the latest.
    pub dagger_aggregate: bool,
    pub thought_coef: f64,
    pub sft_coef: f64,
    pub lr_init: f64,
    pub lr_final: f64,
    pub lr_max_step: u64,
    pub optimizer: Optimizer,
    /// Global gradient-norm cap per step; 0 disables.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    pub total_env_steps: u64,
    pub format_reward: f64,
    /// Trailing episodes summarized in each metrics row.
    pub metrics_window: usize,
    /// Outer iterations between checkpoints; 0 writes only the final one.
    pub checkpoint_every: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            gae_lambda: 0.95,
            clip_c: 0.1,
            entropy_coef: 0.01,
            entropy_on_thought: true,
            value_coef: 0.5,
            ppo_epochs: 4,
            grad_accum_steps: 128,
            micro_batch: 1,
            buffer_size: 512,
            dagger_batch: 1,
            dagger_aggregate: true,
            thought_coef: 0.5,
            sft_coef: 1.0,
            lr_init: 1e-5,
            lr_final: 1e-9,
            lr_max_step: 25,
            optimizer: Optimizer::Sgd,
            max_grad_norm: 0.0,
            normalize_advantages: true,
            total_env_steps: 15_000,
            format_reward: crate::corrector::DEFAULT_FORMAT_REWARD,
            metrics_window: 100,
            checkpoint_every: 0,
        }
    }
}

impl TrainerConfig {
    /// Published per-task budget and thought coefficient on top of the
    /// defaults.
    pub fn for_task(task: Task) -> Self {
        let mut c = Self::default();
        if task == Task::Miniworld {
            c.total_env_steps = 5_000;
            c.thought_coef = 0.2;
        }
        c
    }

    pub fn validate(&self) -> Result<(), String> {
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
        check(self.gamma > 0.0 && self.gamma <= 1.0, "gamma must be in (0, 1]")?;
        check((0.0..=1.0).contains(&self.gae_lambda), "gae_lambda must be in [0, 1]")?;
        check(self.clip_c > 0.0 && self.clip_c < 1.0, "clip_c must be in (0, 1)")?;
        check(self.ppo_epochs >= 1, "ppo_epochs must be at least 1")?;
        check(self.grad_accum_steps >= 1, "grad_accum_steps must be at least 1")?;
        check(self.micro_batch >= 1, "micro_batch must be at least 1")?;
        check(self.buffer_size >= 1, "buffer_size must be at least 1")?;
        check(self.dagger_batch >= 1, "dagger_batch must be at least 1")?;
        check(self.metrics_window >= 1, "metrics_window must be at least 1")?;
        check(self.lr_max_step >= 1, "lr_max_step must be at least 1")?;
        check(
            self.lr_init >= 0.0 && self.lr_final >= 0.0,
            "learning rates must be non-negative",
        )?;
        check(self.thought_coef.is_finite(), "thought_coef must be finite")?;
        check(self.max_grad_norm >= 0.0, "max_grad_norm must be non-negative")?;
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            check(
                (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0,
                "adam betas must be in [0, 1) and eps positive",
            )?;
        }
        Ok(())
    }

    /// Cosine annealing from `lr_init` at step 0 to `lr_final` at
    /// `lr_max_step`, held there afterwards.
    pub fn lr_at(&self, step: u64) -> f64 {
        let t = step.min(self.lr_max_step) as f64 / self.lr_max_step as f64;
        self.lr_final + 0.5 * (self.lr_init - self.lr_final) * (1.0 + (std::f64::consts::PI * t).cos())
    }
}
