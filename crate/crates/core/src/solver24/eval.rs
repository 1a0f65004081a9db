use super::token::{Formula, Op, Token};
use super::{EvalError, Rational};

/// Exact value of an infix expression with standard precedence.
///
/// The formula must not contain "="; strip it with [`Formula::without_equals`].
pub fn evaluate_formula(formula: &Formula) -> Result<Rational, EvalError> {
    let tokens = formula.tokens();
    if tokens.is_empty() {
        return Err(EvalError::Malformed("empty expression".into()));
    }
    let mut parser = Parser { tokens, pos: 0 };
    let value = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(EvalError::Malformed(format!(
            "unexpected '{}' at position {}",
            tokens[parser.pos], parser.pos
        )));
    }
    Ok(value)
}

pub(crate) fn apply(op: Op, lhs: Rational, rhs: Rational) -> Result<Rational, EvalError> {
    Ok(match op {
        Op::Add => lhs + rhs,
        Op::Sub => lhs - rhs,
        Op::Mul => lhs * rhs,
        Op::Div => {
            if rhs == Rational::from_integer(0) {
                return Err(EvalError::DivisionByZero);
            }
            lhs / rhs
        }
    })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Rational, EvalError> {
        let mut value = self.term()?;
        while let Some(Token::Op(op @ (Op::Add | Op::Sub))) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            value = apply(op, value, rhs)?;
        }
        Ok(value)
    }

    fn term(&mut self) -> Result<Rational, EvalError> {
        let mut value = self.factor()?;
        while let Some(Token::Op(op @ (Op::Mul | Op::Div))) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            value = apply(op, value, rhs)?;
        }
        Ok(value)
    }

    fn factor(&mut self) -> Result<Rational, EvalError> {
        match self.peek() {
            Some(Token::Num(n)) => {
                self.pos += 1;
                Ok(Rational::from_integer(i64::from(n)))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let value = self.expr()?;
                if self.peek() != Some(Token::RParen) {
                    return Err(EvalError::Malformed(format!(
                        "unbalanced parenthesis at position {}",
                        self.pos
                    )));
                }
                self.pos += 1;
                Ok(value)
            }
            Some(t) => Err(EvalError::Malformed(format!(
                "expected operand, found '{t}' at position {}",
                self.pos
            ))),
            None => Err(EvalError::Malformed("expression ends with an operator".into())),
        }
    }
}
