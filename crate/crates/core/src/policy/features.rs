//! Hashed indicator features.
//!
//! An observation is turned into at most [`MAX_OBS_FEATURES`] hashed
//! indicators. At each decoding position the model adds context indicators
//! (slot keyword and offset, last token, bigram, position), the conjunction of
//! every observation indicator with the slot/offset pair, and a handful of
//! copy pointers that each nominate one token.
//!
//! Rows per position are bounded by `1 + 4 + MAX_OBS_FEATURES` (context plus
//! conjunctions), so L0 ≤ [`MAX_ROWS_PER_POSITION`].

use crate::envs::{Observation, Symbols};
use crate::seeding::{fnv1a64, mix64};

use super::vocab::{Vocab, ACTION_ID, EOS_ID};

pub const MAX_OBS_FEATURES: usize = 48;
pub const MAX_ROWS_PER_POSITION: usize = 5 + MAX_OBS_FEATURES;
const MAX_OFFSET: usize = 15;

/// Copy-pointer groups; each has one scalar weight.
pub const POINTER_GROUPS: usize = 4;
const PTR_CARD: usize = 0;
const PTR_PREFIX: usize = 1;
const PTR_PLAN: usize = 2;
const PTR_ACTION: usize = 3;

const SLOT_WORDS: &[&str] = &[
    "thought:", "action:", "cards", "formula", "next", "current", "target", "player", "dealer",
    "see", "holding", "subgoal",
];

fn hash_str(s: &str) -> u64 {
    mix64(fnv1a64(s))
}

fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// Observation-side features, computed once per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsFeatures {
    pub hashes: Vec<u64>,
    /// Perceived cards, as token ids, in dealt order.
    pub cards: Vec<usize>,
    /// Current formula, as token ids.
    pub formula: Vec<usize>,
}

fn push(out: &mut Vec<String>, s: String) {
    out.push(s);
}

fn miniworld_type(name: &str) -> &str {
    crate::miniworld::object_type(name)
}

pub fn encode_observation(obs: &Observation) -> ObsFeatures {
    let vocab = Vocab::global();
    let mut f: Vec<String> = vec!["bias".into(), format!("task:{}", obs.task)];
    let mut cards = Vec::new();
    let mut formula = Vec::new();
    match &obs.symbols {
        Symbols::Cards(c) => {
            for (i, v) in c.perceived.iter().enumerate() {
                push(&mut f, format!("card:{v}"));
                push(&mut f, format!("card{i}:{v}"));
            }
            let mut remaining = c.perceived.clone();
            for t in &c.formula {
                if let Ok(n) = t.parse::<u8>() {
                    if let Some(p) = remaining.iter().position(|&r| r == n) {
                        remaining.remove(p);
                    }
                }
            }
            remaining.sort_unstable();
            for v in &remaining {
                push(&mut f, format!("rem:{v}"));
            }
            push(&mut f, format!("nrem:{}", remaining.len()));
            push(&mut f, format!("flen:{}", c.formula.len().min(12)));
            for (j, t) in c.formula.iter().enumerate().take(12) {
                push(&mut f, format!("f{j}:{t}"));
            }
            if let Some(last) = c.formula.last() {
                push(&mut f, format!("flast:{last}"));
            }
            cards = c
                .perceived
                .iter()
                .filter_map(|v| vocab.id(&v.to_string()))
                .collect();
            formula = c.formula.iter().filter_map(|t| vocab.id(t)).collect();
        }
        Symbols::Numberline { target, current } => {
            push(&mut f, format!("nl_t:{target}"));
            push(&mut f, format!("nl_c:{current}"));
            push(&mut f, format!("nl_tc:{target},{current}"));
        }
        Symbols::Blackjack {
            player_total,
            soft,
            dealer_up,
            ..
        } => {
            let up = (*dealer_up).min(10);
            push(&mut f, format!("bj_total:{player_total}"));
            push(&mut f, format!("bj_soft:{soft}"));
            push(&mut f, format!("bj_up:{up}"));
            push(&mut f, format!("bj_tu:{player_total},{up},{soft}"));
        }
        Symbols::Miniworld(m) => {
            push(&mut f, format!("mw_goal:{}", m.goal_text));
            let goal_words: Vec<&str> = m.goal_text.split_whitespace().collect();
            for w in &goal_words {
                push(&mut f, format!("mw_gw:{}", w.trim_end_matches('.')));
            }
            match &m.location {
                Some(l) => {
                    push(&mut f, format!("mw_loc:{}", miniworld_type(l)));
                    push(&mut f, format!("mw_locname:{l}"));
                }
                None => push(&mut f, "mw_loc:none".into()),
            }
            if let Some(open) = m.location_open {
                push(&mut f, format!("mw_open:{open}"));
            }
            for v in m.visible.iter().take(6) {
                push(&mut f, format!("mw_see:{}", miniworld_type(v)));
            }
            push(
                &mut f,
                format!(
                    "mw_hold:{}",
                    m.holding.as_deref().map_or("nothing", miniworld_type)
                ),
            );
            push(&mut f, format!("mw_hlen:{}", obs.history.len().min(20)));
            if let Some(last) = obs.history.last() {
                push(&mut f, format!("mw_last:{last}"));
            }
        }
    }
    let mut hashes: Vec<u64> = f.iter().map(|s| hash_str(s)).collect();
    hashes.sort_unstable();
    hashes.dedup();
    hashes.truncate(MAX_OBS_FEATURES);
    ObsFeatures {
        hashes,
        cards,
        formula,
    }
}

/// Features active when predicting the token after `prefix`.
#[derive(Debug, Clone, Default)]
pub struct PositionFeatures {
    pub rows: Vec<usize>,
    /// (pointer group, nominated token id)
    pub pointers: Vec<(usize, usize)>,
}

fn slot_ids() -> &'static [usize] {
    static IDS: std::sync::OnceLock<Vec<usize>> = std::sync::OnceLock::new();
    IDS.get_or_init(|| {
        let v = Vocab::global();
        SLOT_WORDS.iter().map(|w| v.id(w).expect("slot word in vocab")).collect()
    })
}

/// Tokens of the segment opened by the last occurrence of `keyword`,
/// up to the next slot separator or marker.
fn slot_contents(prefix: &[usize], keyword: usize) -> Option<&[usize]> {
    let start = prefix.iter().rposition(|&t| t == keyword)? + 1;
    let sep = super::vocab::SEP_ID;
    let end = prefix[start..]
        .iter()
        .position(|&t| t == sep || t == ACTION_ID || t == EOS_ID)
        .map_or(prefix.len(), |p| start + p);
    Some(&prefix[start..end])
}

pub fn position_features(obs: &ObsFeatures, prefix: &[usize], buckets: usize) -> PositionFeatures {
    let vocab = Vocab::global();
    let slots = slot_ids();
    let (slot, offset) = match prefix.iter().rposition(|t| slots.contains(t)) {
        Some(p) => (prefix[p], prefix.len() - p - 1),
        None => (usize::MAX, prefix.len()),
    };
    let offset = offset.min(MAX_OFFSET);
    let last = prefix.last().copied().unwrap_or(usize::MAX);
    let prev = if prefix.len() >= 2 {
        prefix[prefix.len() - 2]
    } else {
        usize::MAX
    };
    let slot_key = combine(0x51, ((slot as u64) << 8) | offset as u64);
    let ctx = [
        slot_key,
        combine(0x1A57, last as u64),
        combine(0xB1, ((prev as u64) << 20) ^ last as u64),
        combine(0x5107_1A57, (slot_key << 1) ^ last as u64),
        combine(0x905, prefix.len().min(64) as u64),
    ];
    let bucket = |h: u64| (h % buckets as u64) as usize;
    let mut rows: Vec<usize> = ctx.iter().map(|&h| bucket(h)).collect();
    rows.extend(obs.hashes.iter().map(|&o| bucket(combine(o, slot_key))));

    let mut pointers = Vec::new();
    let id = |w: &str| vocab.id(w).expect("template word in vocab");
    let in_action = slot == ACTION_ID;
    if slot == id("cards") && offset >= 1 {
        if let Some(&c) = obs.cards.get(offset - 1) {
            pointers.push((PTR_CARD, c));
        }
    } else if slot == id("formula") {
        if let Some(&t) = obs.formula.get(offset) {
            pointers.push((PTR_PREFIX, t));
        }
    } else if slot == id("next") && offset == 0 {
        if let Some(plan) = slot_contents(prefix, id("formula")) {
            let nominated = if plan == [id("none")] {
                Some(id("="))
            } else if obs.formula.len() < plan.len() {
                Some(plan[obs.formula.len()])
            } else if obs.formula.len() == plan.len() {
                Some(id("="))
            } else {
                None
            };
            if let Some(t) = nominated {
                pointers.push((PTR_PLAN, t));
            }
        }
    }
    if in_action {
        if let Some(next) = slot_contents(prefix, id("next")) {
            match next.get(offset) {
                Some(&t) => pointers.push((PTR_ACTION, t)),
                None if offset == next.len() => pointers.push((PTR_ACTION, EOS_ID)),
                None => {}
            }
        }
    }
    PositionFeatures { rows, pointers }
}
