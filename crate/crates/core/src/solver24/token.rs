use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SolverError;

/// A playing card as dealt: raw rank 1..=13 (ace low, J/Q/K as 11/12/13).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct CardValue(u8);

impl CardValue {
    pub fn new(rank: u8) -> Result<Self, SolverError> {
        if (1..=13).contains(&rank) {
            Ok(Self(rank))
        } else {
            Err(SolverError::InvalidRank(rank))
        }
    }

    pub fn rank(self) -> u8 {
        self.0
    }

    /// Face cards count as 10.
    pub fn effective(self) -> u8 {
        self.0.min(10)
    }

    /// Display label of the raw rank ("A", "2".."10", "J", "Q", "K").
    pub fn label(self) -> &'static str {
        const LABELS: [&str; 13] = [
            "A", "2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K",
        ];
        LABELS[usize::from(self.0 - 1)]
    }
}

impl TryFrom<u8> for CardValue {
    type Error = SolverError;

    fn try_from(rank: u8) -> Result<Self, Self::Error> {
        Self::new(rank)
    }
}

impl From<CardValue> for u8 {
    fn from(card: CardValue) -> u8 {
        card.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
        }
    }
}

/// One element of the formula alphabet shared by the card games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Num(u8),
    Op(Op),
    LParen,
    RParen,
    Equals,
}

impl Token {
    pub fn as_str(&self) -> &'static str {
        const NUMS: [&str; 10] = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"];
        match self {
            Token::Num(n) => NUMS[usize::from(*n - 1)],
            Token::Op(op) => op.symbol(),
            Token::LParen => "(",
            Token::RParen => ")",
            Token::Equals => "=",
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Token::Num(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Token {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "+" => Token::Op(Op::Add),
            "-" => Token::Op(Op::Sub),
            "*" => Token::Op(Op::Mul),
            "/" => Token::Op(Op::Div),
            "(" => Token::LParen,
            ")" => Token::RParen,
            "=" => Token::Equals,
            _ => match s.parse::<u8>() {
                Ok(n @ 1..=10) => Token::Num(n),
                _ => return Err(SolverError::UnknownToken(s.to_string())),
            },
        })
    }
}

/// An ordered token sequence forming (part of) an arithmetic expression.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Formula(pub Vec<Token>);

impl Formula {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, token: Token) {
        self.0.push(token);
    }

    /// Number tokens in order of appearance.
    pub fn numbers(&self) -> Vec<u8> {
        self.0
            .iter()
            .filter_map(|t| match t {
                Token::Num(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    pub fn has_equals(&self) -> bool {
        self.0.contains(&Token::Equals)
    }

    /// Copy without a trailing "=".
    pub fn without_equals(&self) -> Formula {
        let mut tokens = self.0.clone();
        if tokens.last() == Some(&Token::Equals) {
            tokens.pop();
        }
        Formula(tokens)
    }

    pub fn starts_with(&self, prefix: &Formula) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Individual token strings, as used by environments and thoughts.
    pub fn token_strings(&self) -> Vec<String> {
        self.0.iter().map(|t| t.as_str().to_string()).collect()
    }

    pub fn from_token_strs<S: AsRef<str>>(tokens: &[S]) -> Result<Self, SolverError> {
        tokens
            .iter()
            .map(|t| t.as_ref().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(Formula)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            f.write_str(t.as_str())?;
        }
        Ok(())
    }
}

/// Parses compact ("(10-2)*3") or space separated formulas.
impl FromStr for Formula {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                tokens.push(text.parse()?);
                continue;
            }
            tokens.push(c.to_string().parse()?);
            i += 1;
        }
        Ok(Formula(tokens))
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_cards_count_as_ten() {
        for rank in 11..=13 {
            assert_eq!(CardValue::new(rank).unwrap().effective(), 10);
        }
        assert_eq!(CardValue::new(7).unwrap().effective(), 7);
        assert!(CardValue::new(0).is_err());
        assert!(CardValue::new(14).is_err());
    }

    #[test]
    fn parses_compact_and_spaced_formulas() {
        let a: Formula = "(10-2)*3".parse().unwrap();
        let b: Formula = "( 10 - 2 ) * 3".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert_eq!(a.to_string(), "(10-2)*3");
        assert!("11+1".parse::<Formula>().is_err());
        assert!("2^3".parse::<Formula>().is_err());
    }
}
