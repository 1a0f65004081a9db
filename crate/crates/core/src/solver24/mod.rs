//! Exact 24-point (and 12-point) arithmetic: parsing, evaluation,
//! enumeration of solutions and prefix completability.

mod complete;
mod enumerate;
mod eval;
mod token;

use thiserror::Error;

pub use complete::{complete_formula, completable, completable_values};
pub use enumerate::{
    find_all_correct_formulas, find_all_correct_formulas_12, find_formulas, is_solvable,
    values_solvable, FormulaRules,
};
pub use eval::evaluate_formula;
pub use token::{CardValue, Formula, Op, Token};

/// Exact rational number; always stored in lowest terms with a positive denominator.
pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("card rank {0} outside 1..=13")]
    InvalidRank(u8),
    #[error("unknown formula token {0:?}")]
    UnknownToken(String),
}

/// Lexicographically smallest formula by rendered string.
pub fn smallest(formulas: &[Formula]) -> Option<&Formula> {
    formulas.iter().min_by_key(|f| f.to_string())
}
