use std::collections::HashMap;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const EOS: &str = "<eos>";
pub const THOUGHT: &str = "thought:";
pub const ACTION: &str = "action:";
pub const SEP: &str = ";";

pub const EOS_ID: usize = 0;
pub const THOUGHT_ID: usize = 1;
pub const ACTION_ID: usize = 2;
pub const SEP_ID: usize = 3;

const MARKERS: [&str; 4] = [EOS, THOUGHT, ACTION, SEP];
const MAX_NUMBER: u32 = 31;
const OPERATORS: [&str; 7] = ["+", "-", "*", "/", "(", ")", "="];

/// Slot keywords of the thought templates and task words of the prompts.
const KEYWORDS: &[&str] = &[
    "cards", "are", "formula", "next", "none", "current", "target", "player", "dealer", "soft",
    "hit", "stand", "see", "holding", "nothing", "subgoal", "done",
];

const ACTION_WORDS: &[&str] = &[
    "go", "to", "take", "from", "put", "in/on", "open", "close", "clean", "heat", "cool",
    "toggle", "with", "apply",
];

/// Free-form words with no role in any template.
const FILLER: &[&str] = &[
    "i", "think", "should", "maybe", "the", "so", "then", "now", "let", "me", "try", "first",
    "we", "need", "it", "is", "good", "ok", "answer", "step",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token {0:?} is not in the vocabulary")]
pub struct OutOfVocabulary(pub String);

/// Fixed ordered token list shared by every task.
#[derive(Debug)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    filler: Vec<usize>,
}

impl Vocab {
    fn build() -> Self {
        let mut tokens: Vec<String> = MARKERS.iter().map(|s| s.to_string()).collect();
        tokens.extend((0..=MAX_NUMBER).map(|n| n.to_string()));
        tokens.extend(OPERATORS.iter().map(|s| s.to_string()));
        for group in [KEYWORDS, ACTION_WORDS] {
            tokens.extend(group.iter().map(|s| s.to_string()));
        }
        for w in crate::miniworld::scene_vocabulary() {
            if !tokens.iter().any(|t| t == w) {
                tokens.push(w.to_string());
            }
        }
        let filler_start = tokens.len();
        tokens.extend(FILLER.iter().map(|s| s.to_string()));
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect::<HashMap<_, _>>();
        assert_eq!(index.len(), tokens.len(), "duplicate vocabulary entry");
        Self {
            filler: (filler_start..tokens.len()).collect(),
            tokens,
            index,
        }
    }

    pub fn global() -> &'static Vocab {
        static VOCAB: OnceLock<Vocab> = OnceLock::new();
        VOCAB.get_or_init(Vocab::build)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn filler_ids(&self) -> &[usize] {
        &self.filler
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<usize>, OutOfVocabulary> {
        words
            .iter()
            .map(|w| self.id(w.as_ref()).ok_or_else(|| OutOfVocabulary(w.as_ref().to_string())))
            .collect()
    }

    /// Splits on whitespace and encodes.
    pub fn encode_text(&self, text: &str) -> Result<Vec<usize>, OutOfVocabulary> {
        let words: Vec<&str> = text.split_whitespace().collect();
        self.encode(&words)
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i)).collect()
    }

    pub fn render(&self, ids: &[usize]) -> String {
        self.decode(ids).join(" ")
    }

    /// Hex SHA-256 of the newline-joined token list; stored in checkpoints.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let v = Vocab::global();
        assert!(v.len() <= 512);
        assert_eq!(v.id(EOS), Some(EOS_ID));
        assert_eq!(v.id(ACTION), Some(ACTION_ID));
        for t in ["1", "10", "=", "(", "in/on", "fridge", "apple", "hit", "stand"] {
            assert!(v.id(t).is_some(), "{t}");
        }
        assert_eq!(v.hash().len(), 64);
    }
}
