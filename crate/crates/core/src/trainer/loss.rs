use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Mode, TrainerConfig};
use crate::envs::Observation;
use crate::policy::{observe, Grad, ObsFeatures, OutOfVocabulary, PolicyOutput, PolicyParams, Vocab};

#[derive(Debug, Error, PartialEq)]
#[error("non-finite loss: {0}")]
pub struct NonFiniteLoss(pub String);

/// One environment step as stored in the on-policy buffer.
#[derive(Debug, Clone)]
pub struct Transition {
    pub episode_id: u64,
    pub step: usize,
    pub observation: Observation,
    pub features: ObsFeatures,
    pub output: PolicyOutput,
    pub extracted_action: String,
    pub random_action: bool,
    pub format_valid: bool,
    /// Combined log-probability under the collecting parameters, with the
    /// thought coefficient applied.
    pub logprob_old: f64,
    pub value_old: f64,
    /// Environment reward plus any format bonus.
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    /// Value of the state after a truncation cut; zero otherwise.
    pub bootstrap: f64,
    pub advantage: f64,
    pub return_target: f64,
    /// Parameter version that generated the response.
    pub params_version: u64,
}

/// A corrected thought for one observation, as appended to the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtRecord {
    pub iteration: u64,
    pub episode_id: u64,
    pub step: usize,
    pub observation: Observation,
    /// Thought segment words, from `thought:` through `action:`.
    pub thought: Vec<String>,
}

/// Tokenized form of a [`ThoughtRecord`].
#[derive(Debug, Clone)]
pub struct SftExample {
    pub features: ObsFeatures,
    pub tokens: Vec<usize>,
}

impl SftExample {
    pub fn from_record(r: &ThoughtRecord) -> Result<Self, OutOfVocabulary> {
        Ok(Self {
            features: observe(&r.observation),
            tokens: Vocab::global().encode(&r.thought)?,
        })
    }
}

/// min(r·A, clip(r, 1−c, 1+c)·A) and its derivative in r.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_c: f64) -> (f64, f64) {
    let clipped = ratio.clamp(1.0 - clip_c, 1.0 + clip_c);
    let (u, k) = (ratio * advantage, clipped * advantage);
    if u <= k {
        (u, advantage)
    } else {
        (k, 0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Clipped surrogate + value regression − entropy bonus, averaged over the
/// batch. Entropy is the mean per-token entropy of each response.
pub fn ppo_loss(
    batch: &[&Transition],
    params: &PolicyParams,
    cfg: &TrainerConfig,
) -> Result<(f64, Grad, PpoStats), NonFiniteLoss> {
    let mut grad = Grad::zeros(params);
    let mut stats = PpoStats::default();
    if batch.is_empty() {
        return Ok((0.0, grad, stats));
    }
    let n = batch.len() as f64;
    for t in batch {
        let tokens = &t.output.tokens;
        let scores = params.score(&t.features, tokens);
        let split = t.output.marker.map_or(tokens.len(), |m| m + 1);
        let lp = scores
            .iter()
            .enumerate()
            .fold(0.0, |acc, (i, s)| acc + if i < split { cfg.thought_coef * s.logprob } else { s.logprob });
        let ratio = (lp - t.logprob_old).exp();
        if !ratio.is_finite() {
            return Err(NonFiniteLoss(format!(
                "ratio overflow at episode {} step {}",
                t.episode_id, t.step
            )));
        }
        let (surr, dsurr) = clipped_surrogate(ratio, t.advantage, cfg.clip_c);
        if dsurr == 0.0 && t.advantage != 0.0 {
            stats.clip_fraction += 1.0 / n;
        }
        stats.policy_loss -= surr / n;
        let g = -dsurr * ratio / n;
        let mut a = PolicyParams::sequence_coefs(&t.output, cfg.thought_coef);
        a.iter_mut().for_each(|x| *x *= g);

        let first = if cfg.entropy_on_thought { 0 } else { split };
        let counted = tokens.len().saturating_sub(first);
        let mut b = vec![0.0; tokens.len()];
        if counted > 0 {
            let m = counted as f64;
            stats.entropy += scores[first..].iter().map(|s| s.entropy).sum::<f64>() / m / n;
            b[first..].iter_mut().for_each(|x| *x = -cfg.entropy_coef / (m * n));
        }
        params.accumulate_grad(&t.features, tokens, &a, &b, &mut grad);

        let v = params.value(&t.features);
        let err = v - t.return_target;
        stats.value_loss += err * err / n;
        params.accumulate_value_grad(&t.features, cfg.value_coef * 2.0 * err / n, &mut grad);
    }
    let loss = stats.policy_loss + cfg.value_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;
    if !loss.is_finite() || !grad.is_finite() {
        return Err(NonFiniteLoss("PPO loss or gradient".into()));
    }
    Ok((loss, grad, stats))
}

/// Token-mean negative log-likelihood of the thought segments.
pub fn sft_loss(examples: &[&SftExample], params: &PolicyParams) -> Result<(f64, Grad), NonFiniteLoss> {
    let mut grad = Grad::zeros(params);
    let total: usize = examples.iter().map(|e| e.tokens.len()).sum();
    if total == 0 {
        return Ok((0.0, grad));
    }
    let w = 1.0 / total as f64;
    let mut loss = 0.0;
    for e in examples {
        let scores = params.score(&e.features, &e.tokens);
        loss -= scores.iter().map(|s| s.logprob).sum::<f64>() * w;
        let a = vec![-w; e.tokens.len()];
        let b = vec![0.0; e.tokens.len()];
        params.accumulate_grad(&e.features, &e.tokens, &a, &b, &mut grad);
    }
    if !loss.is_finite() || !grad.is_finite() {
        return Err(NonFiniteLoss("SFT loss or gradient".into()));
    }
    Ok((loss, grad))
}

/// The objective of one micro-batch under `mode`: PPO on `batch`, SFT on
/// `examples` scaled by `sft_coef`, or both.
pub fn combined_loss(
    mode: Mode,
    batch: &[&Transition],
    examples: &[&SftExample],
    params: &PolicyParams,
    cfg: &TrainerConfig,
) -> Result<(f64, Grad), NonFiniteLoss> {
    let mut grad = Grad::zeros(params);
    let mut loss = 0.0;
    if mode.uses_ppo() {
        let (l, g, _) = ppo_loss(batch, params, cfg)?;
        loss += l;
        grad.add_scaled(&g, 1.0);
    }
    if mode.uses_corrector() {
        let (l, g) = sft_loss(examples, params)?;
        loss += cfg.sft_coef * l;
        grad.add_scaled(&g, cfg.sft_coef);
    }
    Ok((loss, grad))
}
