//! Environments: the gym-cards tasks and the miniature household world share
//! one trait so the trainer can drive any of them.

mod blackjack;
mod cards;
mod numberline;
mod prompt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::miniworld::{MiniworldEnv, MiniworldSnapshot, MiniworldSymbols};
use crate::solver24::{Formula, FormulaRules};

pub use blackjack::{basic_strategy, hand_total, BlackjackEnv};
pub use cards::{CardFormulaEnv, CardGameState};
pub use numberline::NumberlineEnv;
pub use prompt::render_prompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Points24,
    Ezpoints,
    Numberline,
    Blackjack,
    Miniworld,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Points24,
        Task::Ezpoints,
        Task::Numberline,
        Task::Blackjack,
        Task::Miniworld,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Points24 => "points24",
            Task::Ezpoints => "ezpoints",
            Task::Numberline => "numberline",
            Task::Blackjack => "blackjack",
            Task::Miniworld => "miniworld",
        }
    }

    pub fn is_card_formula(self) -> bool {
        matches!(self, Task::Points24 | Task::Ezpoints)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| EnvError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("unknown action token {0:?}")]
    UnknownToken(String),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error(transparent)]
    Miniworld(#[from] crate::miniworld::MiniworldError),
}

/// Symbolic view of the two card-formula games.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardSymbols {
    /// Raw ranks as dealt (1..=13).
    pub ranks: Vec<u8>,
    /// Effective values as the agent perceives them; equal to the true
    /// values unless rank-recognition noise is switched on.
    pub perceived: Vec<u8>,
    pub formula: Vec<String>,
    pub target: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbols {
    Cards(CardSymbols),
    Numberline { target: u8, current: u8 },
    Blackjack {
        player: Vec<u8>,
        dealer_up: u8,
        player_total: u8,
        soft: bool,
    },
    Miniworld(MiniworldSymbols),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub task: Task,
    pub symbols: Symbols,
    /// Past action strings; populated for the household world only.
    pub history: Vec<String>,
    pub prompt_text: String,
}

impl Observation {
    pub fn new(task: Task, symbols: Symbols, history: Vec<String>) -> Self {
        let prompt_text = render_prompt(task, &symbols, &history);
        Self {
            task,
            symbols,
            history,
            prompt_text,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub legal: bool,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_value: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub subgoal_hit: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub timeout: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Early cut by a truncation policy; always implies `done`.
    pub truncated: bool,
    pub info: StepInfo,
}

/// Privileged state handed to the oracle corrector.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Cards {
        values: Vec<u8>,
        formula: Formula,
        rules: FormulaRules,
    },
    Numberline { target: u8, current: u8 },
    Blackjack { player: Vec<u8>, dealer_up: u8 },
    Miniworld(Box<MiniworldSnapshot>),
}

pub trait Environment: Send {
    fn task(&self) -> Task;

    /// Starts a new episode; all randomness of the episode flows from `seed`.
    fn reset(&mut self, seed: u64) -> Observation;

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError>;

    fn observation(&self) -> Observation;

    /// Legal (card games) or admissible (household world) actions right now.
    fn legal_actions(&self) -> Vec<String>;

    /// Whether `action` is a syntactically valid action of this task,
    /// regardless of legality in the current state.
    fn parse_action(&self, tokens: &[&str]) -> Option<String>;

    fn is_done(&self) -> bool;

    fn is_truncated(&self) -> bool;

    fn step_count(&self) -> usize;

    fn horizon(&self) -> usize;

    fn ground_truth(&self) -> GroundTruth;

    /// Reward values the task can emit (before any format bonus).
    fn reward_set(&self) -> &'static [f64];
}

/// Per-task environment options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Cut card episodes as soon as the formula can no longer reach the
    /// target; cut household episodes on length or repeated no-op actions.
    pub truncation: bool,
    /// Probability that each card is shown to the agent with a wrong value.
    pub misread_prob: f64,
    /// Household-world history length beyond which episodes are truncated.
    pub max_history: usize,
    /// Consecutive identical no-op actions that trigger truncation.
    pub repeat_cap: usize,
    /// Include the full receptacle inventory in household prompts.
    pub text_description: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            truncation: false,
            misread_prob: 0.0,
            max_history: 30,
            repeat_cap: 3,
            text_description: false,
        }
    }
}

pub fn make_env(task: Task, config: &EnvConfig) -> Box<dyn Environment> {
    match task {
        Task::Points24 => Box::new(CardFormulaEnv::points24(config)),
        Task::Ezpoints => Box::new(CardFormulaEnv::ezpoints(config)),
        Task::Numberline => Box::new(NumberlineEnv::new()),
        Task::Blackjack => Box::new(BlackjackEnv::new()),
        Task::Miniworld => Box::new(MiniworldEnv::random(config)),
    }
}

/// One JSON line of `trajectories.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub episode_id: u64,
    pub step: usize,
    pub task: Task,
    pub obs_symbols: Symbols,
    pub prompt: String,
    pub thought: String,
    pub action_tokens: Vec<String>,
    pub extracted_action: String,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
}
