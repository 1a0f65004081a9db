//! PPO with optional thought cloning, and the run loop around it.

mod config;
mod gae;
mod loss;
mod metrics;
mod optim;
mod run;

use thiserror::Error;

pub use config::{Mode, Optimizer, TrainerConfig};
pub use gae::{compute_gae, LengthMismatch};
pub use loss::{
    clipped_surrogate, combined_loss, ppo_loss, sft_loss, NonFiniteLoss, PpoStats, SftExample,
    ThoughtRecord, Transition,
};
pub use metrics::{discounted, metrics_update, EpisodeStats, MetricsRow, WindowStats, REPORT_GAMMA};
pub use optim::{clip_grad_norm, OptimizerState};
pub use run::{
    collect_rollouts, evaluate, update, warm_start, EvalReport, Rollout, RunConfig, RunState,
    RunSummary, ThoughtDataset, Trainer, UpdateStats, WarmStartConfig,
};

use crate::corrector::CorrectorError;
use crate::envs::{EnvConfig, EnvError, GroundTruth};
use crate::policy::checkpoint::CheckpointError;
use crate::policy::OutOfVocabulary;
use crate::solver24::completable_values;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error("non-finite update: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Vocab(#[from] OutOfVocabulary),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<NonFiniteLoss> for TrainError {
    fn from(e: NonFiniteLoss) -> Self {
        TrainError::NonFinite(e.0)
    }
}

/// Whether an episode in state `truth` would be cut early under `env`.
/// Card tasks: the partial formula can no longer be completed.
/// Household world: the history is over length, or ends in `repeat_cap`
/// identical actions that changed nothing.
pub fn truncation_check(truth: &GroundTruth, env: &EnvConfig) -> bool {
    match truth {
        GroundTruth::Cards { values, formula, rules } => {
            !completable_values(values, formula, rules).unwrap_or(false)
        }
        GroundTruth::Miniworld(snap) => {
            if snap.state.goal_reached {
                return false;
            }
            let mut state = snap.scene.initial_state();
            let mut run = 0usize;
            let mut prev: Option<&str> = None;
            for a in &snap.history {
                let (next, t) = snap.scene.transition(&state, a);
                run = match (t.admissible, prev == Some(a.as_str())) {
                    (true, _) => 0,
                    (false, true) => run + 1,
                    (false, false) => 1,
                };
                state = next;
                prev = Some(a);
            }
            snap.history.len() > env.max_history || run >= env.repeat_cap
        }
        GroundTruth::Numberline { .. } | GroundTruth::Blackjack { .. } => false,
    }
}
