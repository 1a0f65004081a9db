//! Slot-structured thoughts.
//!
//! Every canonical thought is a `;`-separated list of slots, each opened by a
//! keyword:
//!
//! ```text
//! thought: cards are 2 3 4 1 ; formula 2 * 3 * 4 * 1 ; next 2
//! thought: cards are 1 1 1 1 ; formula none ; next =
//! thought: current 3 target 7 ; next +
//! thought: player 17 soft dealer 6 ; next hit
//! thought: see apple 1 mug 2 ; holding nothing ; subgoal take apple ; next go to fridge 1
//! ```

use serde::{Deserialize, Serialize};

use crate::policy::{OutOfVocabulary, Vocab, THOUGHT};
use crate::solver24::{evaluate_formula, Formula};

/// A canonical thought, as emitted by a corrector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thought {
    Cards {
        cards: Vec<u8>,
        /// `None` means the hand has no solution.
        formula: Option<Formula>,
        next: String,
    },
    Numberline { current: u8, target: u8, next: String },
    Blackjack {
        player: u8,
        soft: bool,
        dealer: u8,
        next: String,
    },
    Miniworld {
        see: Vec<String>,
        holding: Option<String>,
        /// Verb and object type, e.g. ("heat", "apple").
        subgoal: (String, String),
        next: String,
    },
}

impl Thought {
    /// The action the thought commits to.
    pub fn next(&self) -> &str {
        match self {
            Thought::Cards { next, .. }
            | Thought::Numberline { next, .. }
            | Thought::Blackjack { next, .. }
            | Thought::Miniworld { next, .. } => next,
        }
    }

    /// Words of the thought segment, starting with the `thought:` marker.
    pub fn words(&self) -> Vec<String> {
        let mut w: Vec<String> = vec![THOUGHT.into()];
        let mut push = |s: &str| w.extend(s.split_whitespace().map(str::to_string));
        match self {
            Thought::Cards {
                cards,
                formula,
                next,
            } => {
                push("cards are");
                for c in cards {
                    push(&c.to_string());
                }
                push("; formula");
                match formula {
                    Some(f) => {
                        for t in f.token_strings() {
                            push(&t);
                        }
                    }
                    None => push("none"),
                }
                push("; next");
                push(next);
            }
            Thought::Numberline {
                current,
                target,
                next,
            } => {
                push(&format!("current {current} target {target} ; next {next}"));
            }
            Thought::Blackjack {
                player,
                soft,
                dealer,
                next,
            } => {
                push(&format!("player {player}"));
                if *soft {
                    push("soft");
                }
                push(&format!("dealer {dealer} ; next {next}"));
            }
            Thought::Miniworld {
                see,
                holding,
                subgoal,
                next,
            } => {
                push("see");
                if see.is_empty() {
                    push("nothing");
                }
                for s in see {
                    push(s);
                }
                push("; holding");
                push(holding.as_deref().unwrap_or("nothing"));
                push(&format!("; subgoal {} {} ; next {next}", subgoal.0, subgoal.1));
            }
        }
        w
    }

    /// Token ids of the thought segment, without the closing `action:`.
    pub fn to_tokens(&self) -> Result<Vec<usize>, OutOfVocabulary> {
        let words = self.words();
        Vocab::global().encode(&words)
    }

    pub fn text(&self) -> String {
        self.words().join(" ")
    }
}

/// Best-effort reading of an arbitrary thought. Slots that do not parse are
/// left empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThoughtFields {
    pub recognized_cards: Option<Vec<u8>>,
    /// `Some(None)` is an explicit "formula none".
    pub proposed_formula: Option<Option<Formula>>,
    pub chosen_action: Option<String>,
    pub current_target: Option<(u8, u8)>,
    /// (total, soft, dealer card)
    pub hand: Option<(u8, bool, u8)>,
    pub seen: Option<Vec<String>>,
    /// `Some(None)` is an explicit "holding nothing".
    pub holding: Option<Option<String>>,
    pub subgoal_claim: Option<(String, String)>,
    pub raw_text: Vec<String>,
}

fn numbers(words: &[&str]) -> Option<Vec<u8>> {
    words.iter().map(|w| w.parse::<u8>().ok()).collect()
}

/// Object names are a type word followed by an instance number.
fn names(words: &[&str]) -> Option<Vec<String>> {
    if !words.len().is_multiple_of(2) {
        return None;
    }
    words
        .chunks(2)
        .map(|p| {
            let ok = p[0].parse::<u8>().is_err() && p[1].parse::<u32>().is_ok();
            ok.then(|| format!("{} {}", p[0], p[1]))
        })
        .collect()
}

impl ThoughtFields {
    /// Reads the words of a thought segment. Leading `thought:` and a
    /// trailing `action:` suffix are ignored.
    pub fn parse<S: AsRef<str>>(words: &[S]) -> Self {
        let raw_text: Vec<String> = words.iter().map(|w| w.as_ref().to_string()).collect();
        let mut body: Vec<&str> = raw_text.iter().map(String::as_str).collect();
        if body.first() == Some(&THOUGHT) {
            body.remove(0);
        }
        if let Some(p) = body.iter().position(|&w| w == crate::policy::ACTION) {
            body.truncate(p);
        }
        let mut f = ThoughtFields::default();
        for seg in body.split(|&w| w == ";") {
            match seg {
                ["cards", "are", rest @ ..] => {
                    if let Some(v) = numbers(rest).filter(|v| !v.is_empty()) {
                        f.recognized_cards = Some(v);
                    }
                }
                ["formula", "none"] => f.proposed_formula = Some(None),
                ["formula", rest @ ..] if !rest.is_empty() => {
                    // Only well-formed expressions count as a plan.
                    if let Some(form) = Formula::from_token_strs(rest).ok().filter(|x| evaluate_formula(x).is_ok()) {
                        f.proposed_formula = Some(Some(form));
                    }
                }
                ["next", rest @ ..] if !rest.is_empty() => {
                    f.chosen_action = Some(rest.join(" "));
                }
                ["current", c, "target", t] => {
                    if let (Ok(c), Ok(t)) = (c.parse(), t.parse()) {
                        f.current_target = Some((c, t));
                    }
                }
                ["player", p, rest @ ..] => {
                    let (soft, rest) = match rest {
                        ["soft", r @ ..] => (true, r),
                        r => (false, r),
                    };
                    if let (Ok(p), ["dealer", d]) = (p.parse(), rest) {
                        if let Ok(d) = d.parse() {
                            f.hand = Some((p, soft, d));
                        }
                    }
                }
                ["see", "nothing"] => f.seen = Some(Vec::new()),
                ["see", rest @ ..] => f.seen = names(rest).filter(|n| !n.is_empty()),
                ["holding", "nothing"] => f.holding = Some(None),
                ["holding", rest @ ..] => {
                    if let Some(n) = names(rest).filter(|n| n.len() == 1) {
                        f.holding = Some(n.into_iter().next());
                    }
                }
                ["subgoal", verb, obj] => {
                    f.subgoal_claim = Some((verb.to_string(), obj.to_string()));
                }
                _ => {}
            }
        }
        f.raw_text = raw_text;
        f
    }

    /// Rebuilds a canonical thought when every slot of one template is
    /// present.
    pub fn to_thought(&self) -> Option<Thought> {
        let next = self.chosen_action.clone()?;
        if let (Some(cards), Some(formula)) = (&self.recognized_cards, &self.proposed_formula) {
            return Some(Thought::Cards {
                cards: cards.clone(),
                formula: formula.clone(),
                next,
            });
        }
        if let Some((current, target)) = self.current_target {
            return Some(Thought::Numberline {
                current,
                target,
                next,
            });
        }
        if let Some((player, soft, dealer)) = self.hand {
            return Some(Thought::Blackjack {
                player,
                soft,
                dealer,
                next,
            });
        }
        if let (Some(see), Some(holding), Some(subgoal)) =
            (&self.seen, &self.holding, &self.subgoal_claim)
        {
            return Some(Thought::Miniworld {
                see: see.clone(),
                holding: holding.clone(),
                subgoal: subgoal.clone(),
                next,
            });
        }
        None
    }
}
