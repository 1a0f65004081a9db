use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::config::Mode;

/// Discount used for the reported discounted return, independent of the
/// training discount.
pub const REPORT_GAMMA: f64 = 0.9;

/// Summary of one finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode_id: u64,
    pub success: bool,
    /// Environment reward only; format bonuses are excluded.
    pub ret: f64,
    pub disc_return: f64,
    pub length: usize,
    pub truncated: bool,
    pub format_valid_steps: usize,
    /// Token ids of the thought at the first step.
    pub first_thought: Vec<usize>,
    /// Mean per-token entropy of the first thought.
    pub thought_entropy: f64,
    /// Steps whose thought matched the oracle's canonical thought exactly.
    pub agreement_steps: usize,
    /// Steps that were judged by a corrector.
    pub judged_steps: usize,
}

pub fn discounted(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub env_step: u64,
    pub episodes: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub disc_return: f64,
    pub ep_len: f64,
    pub format_rate: f64,
    pub thought_diversity: f64,
    pub token_entropy: f64,
    pub lr: f64,
    pub mode: Mode,
    pub seed: u64,
}

/// Aggregates over a window of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub success_rate: f64,
    pub mean_return: f64,
    pub disc_return: f64,
    pub ep_len: f64,
    pub format_rate: f64,
    pub thought_diversity: f64,
    pub token_entropy: f64,
    pub agreement_rate: f64,
}

/// Window statistics; `None` for an empty window.
pub fn metrics_update(window: &[EpisodeStats]) -> Option<WindowStats> {
    if window.is_empty() {
        return None;
    }
    let n = window.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeStats) -> f64| window.iter().map(f).sum::<f64>() / n;
    let steps: usize = window.iter().map(|e| e.length).sum();
    let valid: usize = window.iter().map(|e| e.format_valid_steps).sum();
    let judged: usize = window.iter().map(|e| e.judged_steps).sum();
    let agree: usize = window.iter().map(|e| e.agreement_steps).sum();
    let with_thought: Vec<&EpisodeStats> = window.iter().filter(|e| e.length > 0).collect();
    let distinct: HashSet<&[usize]> = with_thought.iter().map(|e| e.first_thought.as_slice()).collect();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Some(WindowStats {
        success_rate: mean(&|e| f64::from(u8::from(e.success))),
        mean_return: mean(&|e| e.ret),
        disc_return: mean(&|e| e.disc_return),
        ep_len: mean(&|e| e.length as f64),
        format_rate: ratio(valid, steps),
        thought_diversity: ratio(distinct.len(), with_thought.len()),
        token_entropy: if with_thought.is_empty() {
            0.0
        } else {
            with_thought.iter().map(|e| e.thought_entropy).sum::<f64>() / with_thought.len() as f64
        },
        agreement_rate: ratio(agree, judged),
    })
}
