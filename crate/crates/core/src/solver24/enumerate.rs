use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::eval::apply;
use super::token::{CardValue, Formula, Op, Token};
use super::Rational;

/// Target value and operator alphabet of a card-formula game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormulaRules {
    pub target: i64,
    pub cards: usize,
    pub ops: &'static [Op],
    pub parens: bool,
}

impl FormulaRules {
    pub const POINTS24: FormulaRules = FormulaRules {
        target: 24,
        cards: 4,
        ops: &Op::ALL,
        parens: true,
    };

    pub const EZPOINTS: FormulaRules = FormulaRules {
        target: 12,
        cards: 2,
        ops: &[Op::Add, Op::Sub],
        parens: false,
    };

    pub fn target_value(&self) -> Rational {
        Rational::from_integer(self.target)
    }

    /// Whether `token` belongs to this game's action alphabet.
    pub fn allows(&self, token: Token) -> bool {
        match token {
            Token::Num(_) | Token::Equals => true,
            Token::Op(op) => self.ops.contains(&op),
            Token::LParen | Token::RParen => self.parens,
        }
    }
}

#[derive(Clone)]
struct Node {
    value: Option<Rational>,
    prec: u8,
    tokens: Vec<Token>,
}

const ATOM: u8 = 3;

fn combine(op: Op, lhs: &Node, rhs: &Node) -> Node {
    let value = match (lhs.value, rhs.value) {
        (Some(a), Some(b)) => apply(op, a, b).ok(),
        _ => None,
    };
    let prec = op.precedence();
    let wrap_left = lhs.prec < prec;
    let wrap_right = rhs.prec < prec || (rhs.prec == prec && matches!(op, Op::Sub | Op::Div));
    let mut tokens = Vec::with_capacity(lhs.tokens.len() + rhs.tokens.len() + 5);
    push_operand(&mut tokens, &lhs.tokens, wrap_left);
    tokens.push(Token::Op(op));
    push_operand(&mut tokens, &rhs.tokens, wrap_right);
    Node { value, prec, tokens }
}

fn push_operand(out: &mut Vec<Token>, operand: &[Token], wrap: bool) {
    if wrap {
        out.push(Token::LParen);
    }
    out.extend_from_slice(operand);
    if wrap {
        out.push(Token::RParen);
    }
}

/// Every expression tree over `seq` (in this leaf order) with operators from `ops`.
fn trees(seq: &[u8], ops: &[Op]) -> Vec<Node> {
    if seq.len() == 1 {
        return vec![Node {
            value: Some(Rational::from_integer(i64::from(seq[0]))),
            prec: ATOM,
            tokens: vec![Token::Num(seq[0])],
        }];
    }
    let mut out = Vec::new();
    for split in 1..seq.len() {
        let left = trees(&seq[..split], ops);
        let right = trees(&seq[split..], ops);
        for l in &left {
            for r in &right {
                for &op in ops {
                    out.push(combine(op, l, r));
                }
            }
        }
    }
    out
}

fn distinct_permutations(values: &[u8]) -> Vec<Vec<u8>> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut out = vec![sorted.clone()];
    // Lexicographic next-permutation walk visits each distinct ordering once.
    loop {
        let n = sorted.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| sorted[i] < sorted[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| sorted[j] > sorted[i]).unwrap();
        sorted.swap(i, j);
        sorted[i + 1..].reverse();
        out.push(sorted.clone());
    }
    out
}

/// All distinct minimal-parenthesis renderings over `values` reaching the target,
/// sorted by their rendered string.
pub fn find_formulas(values: &[u8], rules: &FormulaRules) -> Vec<Formula> {
    let target = rules.target_value();
    let mut found: Vec<(String, Formula)> = Vec::new();
    for perm in distinct_permutations(values) {
        for node in trees(&perm, rules.ops) {
            if node.value != Some(target) {
                continue;
            }
            if !rules.parens && node.tokens.contains(&Token::LParen) {
                continue;
            }
            let formula = Formula(node.tokens);
            found.push((formula.to_string(), formula));
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.dedup_by(|a, b| a.0 == b.0);
    found.into_iter().map(|(_, f)| f).collect()
}

fn effective(cards: &[CardValue]) -> Vec<u8> {
    cards.iter().map(|c| c.effective()).collect()
}

/// Every canonical 24-point expression using each card exactly once.
pub fn find_all_correct_formulas(cards: &[CardValue; 4]) -> Vec<Formula> {
    find_formulas(&effective(cards), &FormulaRules::POINTS24)
}

/// Two-card expressions reaching 12 with "+" and "-".
pub fn find_all_correct_formulas_12(cards: &[CardValue; 2]) -> Vec<Formula> {
    find_formulas(&effective(cards), &FormulaRules::EZPOINTS)
}

type SolvableMemo = Mutex<HashMap<(i64, usize, Vec<u8>), bool>>;

fn memo() -> &'static SolvableMemo {
    static MEMO: OnceLock<SolvableMemo> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Whether any formula over the effective `values` reaches the target.
/// Memoized per sorted multiset; safe to call from concurrent workers.
pub fn values_solvable(values: &[u8], rules: &FormulaRules) -> bool {
    let mut key = values.to_vec();
    key.sort_unstable();
    let key = (rules.target, rules.ops.len(), key);
    if let Some(&hit) = memo().lock().expect("solver memo poisoned").get(&key) {
        return hit;
    }
    let verdict = !find_formulas(values, rules).is_empty();
    memo()
        .lock()
        .expect("solver memo poisoned")
        .insert(key, verdict);
    verdict
}

pub fn is_solvable(cards: &[CardValue; 4]) -> bool {
    values_solvable(&effective(cards), &FormulaRules::POINTS24)
}
