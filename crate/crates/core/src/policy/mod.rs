//! Toy autoregressive token policy: hashed linear softmax over a fixed
//! vocabulary, with a linear value head.

pub mod checkpoint;
mod features;
mod model;
mod vocab;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::envs::Environment;

pub use features::{
    encode_observation, position_features, ObsFeatures, PositionFeatures, MAX_OBS_FEATURES,
    MAX_ROWS_PER_POSITION, POINTER_GROUPS,
};
pub use model::{
    observe, penalize, sampling_distribution, GenerationConfig, Grad, PolicyConfig,
    PolicyOutput, PolicyParams, TokenScore,
};
pub use vocab::{OutOfVocabulary, Vocab, ACTION, ACTION_ID, EOS, EOS_ID, SEP, SEP_ID, THOUGHT, THOUGHT_ID};

/// Outcome of action extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub action: String,
    /// True when the response had no parseable action and a legal action was
    /// drawn uniformly instead.
    pub random: bool,
}

/// Take the action written after "action:" when it parses in the task's
/// alphabet; otherwise explore uniformly over `legal`.
pub fn extract_action(
    tokens: &[usize],
    parse: impl Fn(&[&str]) -> Option<String>,
    legal: &[String],
    rng: &mut impl Rng,
) -> Extracted {
    let out = PolicyOutput::from_tokens(tokens.to_vec(), vec![0.0; tokens.len()]);
    if out.marker.is_some() {
        let words = Vocab::global().decode(out.action());
        if let Some(a) = parse(&words) {
            return Extracted {
                action: a,
                random: false,
            };
        }
    }
    let action = legal.choose(rng).expect("legal set is nonempty").clone();
    Extracted {
        action,
        random: true,
    }
}

/// [`extract_action`] against an environment's own alphabet and legal set.
pub fn extract_for_env(tokens: &[usize], env: &dyn Environment, rng: &mut impl Rng) -> Extracted {
    extract_action(tokens, |w| env.parse_action(w), &env.legal_actions(), rng)
}
