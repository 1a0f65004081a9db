use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{encode_observation, position_features, ObsFeatures, PositionFeatures, POINTER_GROUPS};
use super::vocab::{Vocab, ACTION_ID, EOS_ID};
use crate::envs::Observation;
use crate::seeding::rng_from_seed;

/// Architecture knobs. Part of the checkpoint header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Number of hashed feature rows.
    pub buckets: usize,
    pub embed_dim: usize,
    /// Geometric weight of older tokens in the recency summary.
    pub decay: f64,
    /// How many recent tokens enter the recency summary.
    pub window: usize,
    pub init_scale: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            buckets: 1 << 14,
            embed_dim: 8,
            decay: 0.5,
            window: 6,
            init_scale: 0.01,
        }
    }
}

/// Sampling knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub max_len: usize,
    pub temperature: f64,
    pub repetition_penalty: f64,
    /// Argmax decoding instead of sampling.
    pub greedy: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            max_len: 256,
            temperature: 0.2,
            repetition_penalty: 1.2,
            greedy: false,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature > 0.0) {
            return Err("temperature must be positive".into());
        }
        if !(self.repetition_penalty >= 1.0) {
            return Err("repetition_penalty must be at least 1".into());
        }
        if self.max_len < 8 {
            return Err("max_len must be at least 8".into());
        }
        Ok(())
    }
}

/// logits[v] = Σ_rows W[row][v] + E[v]·r + Σ_pointers P[g]·[v = nominee],
/// with r = Σ_k decay^k E[prefix[-1-k]] over the last `window` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    pub vocab_size: usize,
    /// Row-major buckets × vocab.
    pub weights: Vec<f64>,
    /// Row-major vocab × embed_dim.
    pub embeddings: Vec<f64>,
    pub pointers: Vec<f64>,
    pub value_weights: Vec<f64>,
    /// Bumped by every optimizer step.
    pub version: u64,
}

/// Gradient (or any other parameter-shaped delta), stored sparsely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grad {
    pub rows: HashMap<usize, Vec<f64>>,
    pub embeddings: Vec<f64>,
    pub pointers: Vec<f64>,
    pub value: HashMap<usize, f64>,
}

impl Grad {
    pub fn zeros(params: &PolicyParams) -> Self {
        Self {
            rows: HashMap::new(),
            embeddings: vec![0.0; params.embeddings.len()],
            pointers: vec![0.0; POINTER_GROUPS],
            value: HashMap::new(),
        }
    }

    fn row(&mut self, row: usize, width: usize) -> &mut Vec<f64> {
        self.rows.entry(row).or_insert_with(|| vec![0.0; width])
    }

    /// self += scale · other
    pub fn add_scaled(&mut self, other: &Grad, scale: f64) {
        for (&r, vals) in &other.rows {
            let dst = self.row(r, vals.len());
            for (d, s) in dst.iter_mut().zip(vals) {
                *d += scale * s;
            }
        }
        for (d, s) in self.embeddings.iter_mut().zip(&other.embeddings) {
            *d += scale * s;
        }
        for (d, s) in self.pointers.iter_mut().zip(&other.pointers) {
            *d += scale * s;
        }
        for (&r, &s) in &other.value {
            *self.value.entry(r).or_insert(0.0) += scale * s;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for vals in self.rows.values_mut() {
            vals.iter_mut().for_each(|v| *v *= k);
        }
        self.embeddings.iter_mut().for_each(|v| *v *= k);
        self.pointers.iter_mut().for_each(|v| *v *= k);
        self.value.values_mut().for_each(|v| *v *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|v| v.is_finite())
            && self.embeddings.iter().all(|v| v.is_finite())
            && self.pointers.iter().all(|v| v.is_finite())
            && self.value.values().all(|v| v.is_finite())
    }

    pub fn sq_norm(&self) -> f64 {
        let mut keys: Vec<_> = self.rows.keys().copied().collect();
        keys.sort_unstable();
        let mut s: f64 = keys
            .iter()
            .map(|k| self.rows[k].iter().map(|v| v * v).sum::<f64>())
            .sum();
        s += self.embeddings.iter().map(|v| v * v).sum::<f64>();
        s += self.pointers.iter().map(|v| v * v).sum::<f64>();
        let mut vk: Vec<_> = self.value.keys().copied().collect();
        vk.sort_unstable();
        s + vk.iter().map(|k| self.value[k].powi(2)).sum::<f64>()
    }
}

/// Per-position diagnostics of a scored sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenScore {
    pub logprob: f64,
    pub entropy: f64,
}

/// Tokens of one generated response, split at the first "action:".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub tokens: Vec<usize>,
    /// Index of the first "action:" marker.
    pub marker: Option<usize>,
    /// Unpenalized temperature-1 log-probabilities of each token.
    pub logprobs: Vec<f64>,
}

impl PolicyOutput {
    pub fn from_tokens(tokens: Vec<usize>, logprobs: Vec<f64>) -> Self {
        let marker = tokens.iter().position(|&t| t == ACTION_ID);
        Self {
            tokens,
            marker,
            logprobs,
        }
    }

    /// Thought segment including its closing "action:" marker.
    pub fn thought_segment(&self) -> &[usize] {
        match self.marker {
            Some(m) => &self.tokens[..=m],
            None => &self.tokens,
        }
    }

    /// Thought words without the closing marker.
    pub fn thought(&self) -> &[usize] {
        match self.marker {
            Some(m) => &self.tokens[..m],
            None => &self.tokens,
        }
    }

    /// Action segment including the terminating end-of-sequence if emitted.
    pub fn action_segment(&self) -> &[usize] {
        match self.marker {
            Some(m) => &self.tokens[m + 1..],
            None => &[],
        }
    }

    /// Action words without end-of-sequence.
    pub fn action(&self) -> &[usize] {
        let seg = self.action_segment();
        match seg.iter().position(|&t| t == EOS_ID) {
            Some(e) => &seg[..e],
            None => seg,
        }
    }

    /// λ·Σ thought + Σ action, from the recorded per-token log-probabilities.
    pub fn combined_logprob(&self, thought_coef: f64) -> f64 {
        let split = self.marker.map_or(self.tokens.len(), |m| m + 1);
        weighted_sum(self.logprobs.iter().copied(), split, thought_coef)
    }
}

/// Σ w_i x_i in token order with w_i = `thought_coef` before `split`, else 1.
/// A single left fold, so a unit coefficient reproduces the plain sum
/// bit for bit.
fn weighted_sum(values: impl Iterator<Item = f64>, split: usize, thought_coef: f64) -> f64 {
    values
        .enumerate()
        .fold(0.0, |acc, (i, x)| acc + if i < split { thought_coef * x } else { x })
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Box-Muller standard normal.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl PolicyParams {
    /// Zero context weights, zero value head, small random embeddings.
    pub fn init(config: PolicyConfig, seed: u64) -> Self {
        let v = Vocab::global().len();
        let mut rng = rng_from_seed(seed);
        let embeddings = (0..v * config.embed_dim)
            .map(|_| config.init_scale * standard_normal(&mut rng))
            .collect();
        Self {
            weights: vec![0.0; config.buckets * v],
            value_weights: vec![0.0; config.buckets],
            pointers: vec![0.0; POINTER_GROUPS],
            embeddings,
            vocab_size: v,
            config,
            version: 0,
        }
    }

    fn embedding(&self, token: usize) -> &[f64] {
        let d = self.config.embed_dim;
        &self.embeddings[token * d..(token + 1) * d]
    }

    fn recency(&self, prefix: &[usize]) -> Vec<f64> {
        let d = self.config.embed_dim;
        let mut r = vec![0.0; d];
        let mut w = 1.0;
        for &t in prefix.iter().rev().take(self.config.window) {
            for (ri, e) in r.iter_mut().zip(self.embedding(t)) {
                *ri += w * e;
            }
            w *= self.config.decay;
        }
        r
    }

    pub fn features(&self, obs: &ObsFeatures, prefix: &[usize]) -> PositionFeatures {
        position_features(obs, prefix, self.config.buckets)
    }

    fn logits_with(&self, pf: &PositionFeatures, prefix: &[usize]) -> Vec<f64> {
        let v = self.vocab_size;
        let mut logits = vec![0.0; v];
        for &row in &pf.rows {
            let w = &self.weights[row * v..(row + 1) * v];
            for (l, x) in logits.iter_mut().zip(w) {
                *l += x;
            }
        }
        let r = self.recency(prefix);
        for (tok, l) in logits.iter_mut().enumerate() {
            *l += self.embedding(tok).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        }
        for &(g, tok) in &pf.pointers {
            logits[tok] += self.pointers[g];
        }
        logits
    }

    /// Unpenalized logits for the token following `prefix`.
    pub fn next_token_logits(&self, obs: &ObsFeatures, prefix: &[usize]) -> Vec<f64> {
        let pf = self.features(obs, prefix);
        self.logits_with(&pf, prefix)
    }

    /// Temperature-1 log-probabilities of the token following `prefix`.
    pub fn next_token_logprobs(&self, obs: &ObsFeatures, prefix: &[usize]) -> Vec<f64> {
        log_softmax(&self.next_token_logits(obs, prefix))
    }

    /// Log-probability and entropy of every token of `tokens` under teacher
    /// forcing from an empty prefix.
    pub fn score(&self, obs: &ObsFeatures, tokens: &[usize]) -> Vec<TokenScore> {
        (0..tokens.len())
            .map(|i| {
                let lp = self.next_token_logprobs(obs, &tokens[..i]);
                let entropy = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
                TokenScore {
                    logprob: lp[tokens[i]],
                    entropy,
                }
            })
            .collect()
    }

    /// Adds Σ_i a_i ∂logp_i/∂θ + b_i ∂H_i/∂θ into `grad`.
    pub fn accumulate_grad(
        &self,
        obs: &ObsFeatures,
        tokens: &[usize],
        logprob_coef: &[f64],
        entropy_coef: &[f64],
        grad: &mut Grad,
    ) {
        let v = self.vocab_size;
        let d = self.config.embed_dim;
        for i in 0..tokens.len() {
            let (a, b) = (logprob_coef[i], entropy_coef[i]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let prefix = &tokens[..i];
            let pf = self.features(obs, prefix);
            let lp = log_softmax(&self.logits_with(&pf, prefix));
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            let h = -p.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>();
            // dL/dlogit[u]
            let dl: Vec<f64> = (0..v)
                .map(|u| {
                    let dlogp = f64::from(u8::from(u == tokens[i])) - p[u];
                    let dent = -p[u] * (lp[u] + h);
                    a * dlogp + b * dent
                })
                .collect();
            for &row in &pf.rows {
                let g = grad.row(row, v);
                for (gi, x) in g.iter_mut().zip(&dl) {
                    *gi += x;
                }
            }
            for &(grp, tok) in &pf.pointers {
                grad.pointers[grp] += dl[tok];
            }
            let r = self.recency(prefix);
            let mut dr = vec![0.0; d];
            for (u, &x) in dl.iter().enumerate() {
                let e = self.embedding(u);
                for k in 0..d {
                    grad.embeddings[u * d + k] += x * r[k];
                    dr[k] += x * e[k];
                }
            }
            let mut w = 1.0;
            for &t in prefix.iter().rev().take(self.config.window) {
                for k in 0..d {
                    grad.embeddings[t * d + k] += w * dr[k];
                }
                w *= self.config.decay;
            }
        }
    }

    /// λ·Σ logp(thought incl. marker) + Σ logp(action incl. end).
    pub fn sequence_logprob(&self, obs: &ObsFeatures, output: &PolicyOutput, thought_coef: f64) -> f64 {
        let scores = self.score(obs, &output.tokens);
        let split = output.marker.map_or(output.tokens.len(), |m| m + 1);
        weighted_sum(scores.iter().map(|s| s.logprob), split, thought_coef)
    }

    /// Per-token weights that turn [`Self::accumulate_grad`] into the
    /// gradient of [`Self::sequence_logprob`].
    pub fn sequence_coefs(output: &PolicyOutput, thought_coef: f64) -> Vec<f64> {
        let split = output.marker.map_or(output.tokens.len(), |m| m + 1);
        (0..output.tokens.len())
            .map(|i| if i < split { thought_coef } else { 1.0 })
            .collect()
    }

    pub fn grad_sequence_logprob(
        &self,
        obs: &ObsFeatures,
        output: &PolicyOutput,
        thought_coef: f64,
    ) -> Grad {
        let mut g = Grad::zeros(self);
        let a = Self::sequence_coefs(output, thought_coef);
        let b = vec![0.0; a.len()];
        self.accumulate_grad(obs, &output.tokens, &a, &b, &mut g);
        g
    }

    fn value_rows(&self, obs: &ObsFeatures) -> Vec<usize> {
        obs.hashes
            .iter()
            .map(|h| (h % self.config.buckets as u64) as usize)
            .collect()
    }

    pub fn value(&self, obs: &ObsFeatures) -> f64 {
        self.value_rows(obs)
            .iter()
            .map(|&r| self.value_weights[r])
            .sum()
    }

    /// Adds coef · ∂V/∂θ into `grad`.
    pub fn accumulate_value_grad(&self, obs: &ObsFeatures, coef: f64, grad: &mut Grad) {
        for r in self.value_rows(obs) {
            *grad.value.entry(r).or_insert(0.0) += coef;
        }
    }

    /// θ ← θ − lr·g, then bump the version.
    pub fn apply_step(&mut self, grad: &Grad, lr: f64) {
        let v = self.vocab_size;
        for (&row, vals) in &grad.rows {
            for (w, g) in self.weights[row * v..(row + 1) * v].iter_mut().zip(vals) {
                *w -= lr * g;
            }
        }
        for (w, g) in self.embeddings.iter_mut().zip(&grad.embeddings) {
            *w -= lr * g;
        }
        for (w, g) in self.pointers.iter_mut().zip(&grad.pointers) {
            *w -= lr * g;
        }
        for (&r, g) in &grad.value {
            self.value_weights[r] -= lr * g;
        }
        self.version += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.embeddings.iter().all(|w| w.is_finite())
            && self.pointers.iter().all(|w| w.is_finite())
            && self.value_weights.iter().all(|w| w.is_finite())
    }

    /// Samples a response. Sampling sees temperature and repetition
    /// penalty; the recorded log-probabilities do not.
    pub fn generate(
        &self,
        obs: &ObsFeatures,
        gen: &GenerationConfig,
        rng: &mut ChaCha8Rng,
    ) -> PolicyOutput {
        let mut tokens = Vec::new();
        let mut logprobs = Vec::new();
        while tokens.len() < gen.max_len {
            let logits = self.next_token_logits(obs, &tokens);
            let lp = log_softmax(&logits);
            let adjusted = penalize(&logits, &tokens, gen.repetition_penalty);
            let tok = if gen.greedy {
                argmax(&adjusted)
            } else {
                sample(&adjusted, gen.temperature, rng)
            };
            tokens.push(tok);
            logprobs.push(lp[tok]);
            if tok == EOS_ID {
                break;
            }
        }
        PolicyOutput::from_tokens(tokens, logprobs)
    }
}

/// Repetition penalty on tokens already emitted.
pub fn penalize(logits: &[f64], emitted: &[usize], penalty: f64) -> Vec<f64> {
    let mut out = logits.to_vec();
    if penalty == 1.0 {
        return out;
    }
    let mut seen = vec![false; logits.len()];
    for &t in emitted {
        seen[t] = true;
    }
    for (l, s) in out.iter_mut().zip(seen) {
        if s {
            *l = if *l > 0.0 { *l / penalty } else { *l * penalty };
        }
    }
    out
}

/// softmax(logits / temperature)
pub fn sampling_distribution(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    log_softmax(&scaled).into_iter().map(f64::exp).collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn sample(logits: &[f64], temperature: f64, rng: &mut impl Rng) -> usize {
    let p = sampling_distribution(logits, temperature);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver at the top; take the last token with mass.
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// Convenience: observation features straight from an environment view.
pub fn observe(obs: &Observation) -> ObsFeatures {
    encode_observation(obs)
}
