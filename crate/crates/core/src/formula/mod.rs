//! Linear formulas over exact rationals: affine expressions, atoms,
//! clauses (conjunctions) and DNF formulas, plus intervals and input boxes.

mod affine;
mod interval;
mod logic;

pub use affine::{AffineExpr, VarId};
pub use interval::{InputBox, Interval};
pub use logic::{Atom, Clause, DnfFormula, Relation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("substitution of {0} would reference itself")]
    SelfReference(VarId),
    #[error("variable {0} has no value")]
    Unbound(VarId),
    #[error("empty interval")]
    EmptyInterval,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
