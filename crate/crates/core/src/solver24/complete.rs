//! Can a partially typed formula still be finished so that it uses every
//! card and evaluates to the target?
//!
//! The prefix is fed through an incremental evaluator whose state is a stack
//! of parenthesis frames, each holding the additive accumulator, the pending
//! multiplicative term and the operator waiting for an operand. From that
//! state a depth-first search appends tokens, memoizing dead states keyed by
//! (remaining cards, frame stack, prefix frames still open).

use std::collections::HashSet;

use super::eval::apply;
use super::token::{Formula, Op, Token};
use super::{EvalError, FormulaRules, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Frame {
    acc: Rational,
    add: Op,
    term: Option<Rational>,
    mul: Option<Op>,
}

impl Frame {
    fn open() -> Self {
        Frame {
            acc: Rational::from_integer(0),
            add: Op::Add,
            term: None,
            mul: None,
        }
    }

    fn expects_operand(&self) -> bool {
        self.term.is_none() || self.mul.is_some()
    }

    fn finish(&self) -> Rational {
        let term = self.term.expect("finish called on incomplete frame");
        match self.add {
            Op::Sub => self.acc - term,
            _ => self.acc + term,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    remaining: Vec<u8>,
    frames: Vec<Frame>,
    /// How many of the bottom frames were opened by the prefix.
    base: usize,
}

enum Feed {
    Ok,
    /// Syntactically impossible continuation.
    Syntax(&'static str),
    /// Well-formed but can never reach the target (division by zero, card
    /// not available).
    Dead,
}

impl State {
    fn feed_operand(&mut self, value: Rational) -> Feed {
        let frame = self.frames.last_mut().unwrap();
        match (frame.term, frame.mul) {
            (None, _) => frame.term = Some(value),
            (Some(t), Some(op)) => match apply(op, t, value) {
                Ok(v) => {
                    frame.term = Some(v);
                    frame.mul = None;
                }
                Err(_) => return Feed::Dead,
            },
            (Some(_), None) => return Feed::Syntax("operand follows operand"),
        }
        Feed::Ok
    }

    fn feed(&mut self, token: Token, rules: &FormulaRules) -> Feed {
        if !rules.allows(token) {
            return Feed::Syntax("token outside the game alphabet");
        }
        let expecting = self.frames.last().unwrap().expects_operand();
        match token {
            Token::Num(n) => {
                if !expecting {
                    return Feed::Syntax("number follows operand");
                }
                let Some(pos) = self.remaining.iter().position(|&r| r == n) else {
                    return Feed::Dead;
                };
                self.remaining.remove(pos);
                self.feed_operand(Rational::from_integer(i64::from(n)))
            }
            Token::Op(op) => {
                if expecting {
                    return Feed::Syntax("operator without left operand");
                }
                let frame = self.frames.last_mut().unwrap();
                match op {
                    Op::Add | Op::Sub => {
                        frame.acc = frame.finish();
                        frame.add = op;
                        frame.term = None;
                    }
                    Op::Mul | Op::Div => frame.mul = Some(op),
                }
                Feed::Ok
            }
            Token::LParen => {
                if !expecting {
                    return Feed::Syntax("'(' follows operand");
                }
                self.frames.push(Frame::open());
                Feed::Ok
            }
            Token::RParen => {
                if expecting {
                    return Feed::Syntax("')' without operand");
                }
                if self.frames.len() < 2 {
                    return Feed::Syntax("unbalanced ')'");
                }
                let inner = self.frames.pop().unwrap();
                if self.frames.len() < self.base {
                    self.base = self.frames.len();
                }
                self.feed_operand(inner.finish())
            }
            Token::Equals => Feed::Syntax("'=' inside a partial formula"),
        }
    }

    fn complete_value(&self) -> Option<Rational> {
        if self.frames.len() == 1 && self.remaining.is_empty() {
            let frame = &self.frames[0];
            if !frame.expects_operand() {
                return Some(frame.finish());
            }
        }
        None
    }
}

/// Tokens tried at each step, in rendered-string order so the first witness
/// found is the lexicographically smallest continuation.
fn candidate_tokens(rules: &FormulaRules) -> Vec<Token> {
    let mut tokens: Vec<Token> = [Token::LParen, Token::RParen]
        .into_iter()
        .chain(rules.ops.iter().map(|&op| Token::Op(op)))
        .chain((1..=10).map(Token::Num))
        .filter(|t| rules.allows(*t))
        .collect();
    tokens.sort_by_key(|t| t.as_str());
    tokens
}

struct Search<'a> {
    rules: &'a FormulaRules,
    target: Rational,
    candidates: Vec<Token>,
    dead: HashSet<State>,
}

impl Search<'_> {
    fn run(&mut self, state: &State, out: &mut Vec<Token>) -> bool {
        if state.complete_value() == Some(self.target) {
            return true;
        }
        if self.dead.contains(state) {
            return false;
        }
        let new_open = state.frames.len() - state.base;
        for i in 0..self.candidates.len() {
            let token = self.candidates[i];
            match token {
                // A new group only helps if it will enclose at least two
                // numbers, and nested new groups need strictly more.
                Token::LParen if new_open + 2 > state.remaining.len() => continue,
                Token::Num(n) if !state.remaining.contains(&n) => continue,
                _ => {}
            }
            let mut next = state.clone();
            if !matches!(next.feed(token, self.rules), Feed::Ok) {
                continue;
            }
            out.push(token);
            if self.run(&next, out) {
                return true;
            }
            out.pop();
        }
        self.dead.insert(state.clone());
        false
    }
}

/// Returns the lexicographically first continuation (possibly empty) that turns
/// `partial` into a complete formula using exactly `values` and reaching the
/// target, or `None` when the prefix is a dead end.
pub fn complete_formula(
    values: &[u8],
    partial: &Formula,
    rules: &FormulaRules,
) -> Result<Option<Vec<Token>>, EvalError> {
    let mut state = State {
        remaining: {
            let mut v = values.to_vec();
            v.sort_unstable();
            v
        },
        frames: vec![Frame::open()],
        base: 1,
    };
    for (i, &token) in partial.tokens().iter().enumerate() {
        match state.feed(token, rules) {
            Feed::Ok => {}
            Feed::Dead => return Ok(None),
            Feed::Syntax(why) => {
                return Err(EvalError::Malformed(format!("{why} at position {i}")));
            }
        }
        state.base = state.base.max(state.frames.len());
    }
    if !super::values_solvable(values, rules) {
        return Ok(None);
    }
    let mut search = Search {
        rules,
        target: rules.target_value(),
        candidates: candidate_tokens(rules),
        dead: HashSet::new(),
    };
    let mut out = Vec::new();
    Ok(search.run(&state, &mut out).then_some(out))
}

/// Whether some legal continuation of `partial` finishes at the target.
pub fn completable_values(
    values: &[u8],
    partial: &Formula,
    rules: &FormulaRules,
) -> Result<bool, EvalError> {
    if partial.is_empty() {
        return Ok(super::values_solvable(values, rules));
    }
    complete_formula(values, partial, rules).map(|w| w.is_some())
}

pub fn completable(
    cards: &[super::CardValue; 4],
    partial: &Formula,
) -> Result<bool, EvalError> {
    let values: Vec<u8> = cards.iter().map(|c| c.effective()).collect();
    completable_values(&values, partial, &FormulaRules::POINTS24)
}
