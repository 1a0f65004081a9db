//! Thought correction: an oracle built on privileged state, a remote
//! chat-completion client speaking the same JSON verdict protocol, and the
//! format judge.

mod judge;
mod oracle;
pub mod remote;
mod thought;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::envs::{GroundTruth, Observation, Task};
use crate::miniworld::MiniworldError;
use crate::solver24::Formula;

pub use judge::{format_judge, DEFAULT_FORMAT_REWARD};
pub use oracle::{oracle_correct, OracleCorrector};
pub use remote::{CorrectorEndpoint, RemoteCorrector};
pub use thought::{Thought, ThoughtFields};

#[derive(Debug, Error)]
pub enum CorrectorError {
    #[error("corrector endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("corrector response violates the schema: {0}")]
    SchemaViolation(String),
    #[error("environment variable {0} holding the corrector API key is not set")]
    MissingApiKey(String),
    #[error("corrector cannot judge this state: {0}")]
    Miniworld(#[from] MiniworldError),
    #[error("corrector request is malformed: {0}")]
    BadRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

/// Episode target as carried in the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TargetFormula {
    Concrete(Formula),
    #[default]
    NotDetermined,
}

pub const NOT_DETERMINED: &str = "NOT DETERMINED";

impl TargetFormula {
    pub fn concrete(&self) -> Option<&Formula> {
        match self {
            TargetFormula::Concrete(f) => Some(f),
            TargetFormula::NotDetermined => None,
        }
    }
}

impl From<Option<Formula>> for TargetFormula {
    fn from(f: Option<Formula>) -> Self {
        f.map_or(TargetFormula::NotDetermined, TargetFormula::Concrete)
    }
}

impl fmt::Display for TargetFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFormula::Concrete(x) => write!(f, "{x}"),
            TargetFormula::NotDetermined => f.write_str(NOT_DETERMINED),
        }
    }
}

impl Serialize for TargetFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetFormula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_target(&text).map_err(serde::de::Error::custom)
    }
}

/// Reads a target field; "NOT DETERMINED" in any spacing or case, "none" and
/// the empty string all mean no target.
pub fn parse_target(text: &str) -> Result<TargetFormula, String> {
    let t = text.trim();
    let norm = t.to_ascii_uppercase().replace(['_', ' '], "");
    if norm.is_empty() || norm == "NOTDETERMINED" || norm == "NONE" || norm == "NULL" {
        return Ok(TargetFormula::NotDetermined);
    }
    t.parse::<Formula>()
        .map(TargetFormula::Concrete)
        .map_err(|e| format!("target formula {t:?}: {e}"))
}

/// A corrected thought in structured and token form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub thought: Thought,
    /// Words of the thought segment, `thought:` first.
    pub tokens: Vec<String>,
}

impl Correction {
    pub fn new(thought: Thought) -> Self {
        let tokens = thought.words();
        Self { thought, tokens }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResponse {
    pub answers: Vec<String>,
    pub evaluation: Verdict,
    pub possible_solution: Option<Verdict>,
    pub target_formula: TargetFormula,
    pub correction: Option<Correction>,
    pub format_valid: bool,
}

impl CorrectionResponse {
    pub fn check(&self) -> Result<(), String> {
        match self.evaluation {
            Verdict::Yes if self.correction.is_some() => {
                Err("a YES verdict carries a correction".into())
            }
            Verdict::No if self.possible_solution == Some(Verdict::Yes) => {
                if self.target_formula.concrete().is_none() {
                    Err("possible solution without a target formula".into())
                } else if self.correction.is_none() {
                    Err("possible solution without a correction".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Episode-scoped memory of a corrector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpisodeContext {
    pub target: Option<Formula>,
}

/// One step to judge.
#[derive(Debug, Clone)]
pub struct CorrectionRequest {
    pub episode_id: u64,
    pub step: usize,
    pub observation: Observation,
    pub truth: GroundTruth,
    /// Words of the agent's thought segment.
    pub thought: Vec<String>,
    pub format_valid: bool,
}

impl CorrectionRequest {
    pub fn task(&self) -> Task {
        self.observation.task
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub response: CorrectionResponse,
    pub fallback_used: bool,
    pub retries: u32,
}

pub trait Corrector: Send + Sync {
    fn correct(
        &self,
        request: &CorrectionRequest,
        ctx: &mut EpisodeContext,
    ) -> Result<CorrectionOutcome, CorrectorError>;
}

/// Which corrector a run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrectorConfig {
    #[default]
    Oracle,
    Remote(CorrectorEndpoint),
}

impl CorrectorConfig {
    pub fn build(&self) -> Result<Box<dyn Corrector>, CorrectorError> {
        Ok(match self {
            CorrectorConfig::Oracle => Box::new(OracleCorrector),
            CorrectorConfig::Remote(e) => Box::new(RemoteCorrector::new(e.clone())?),
        })
    }
}

/// One line of `corrections.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionLog {
    pub episode_id: u64,
    pub step: usize,
    pub evaluation: Verdict,
    pub possible_solution: Option<Verdict>,
    pub target_formula: TargetFormula,
    pub fallback_used: bool,
    pub latency_ms: u64,
}

impl CorrectionLog {
    pub fn new(request: &CorrectionRequest, outcome: &CorrectionOutcome, latency_ms: u64) -> Self {
        Self {
            episode_id: request.episode_id,
            step: request.step,
            evaluation: outcome.response.evaluation,
            possible_solution: outcome.response.possible_solution,
            target_formula: outcome.response.target_formula.clone(),
            fallback_used: outcome.fallback_used,
            latency_ms,
        }
    }
}
