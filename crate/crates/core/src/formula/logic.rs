use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{AffineExpr, FormulaError, VarId};
use crate::rational::Rational;

/// Relation of an atom's expression against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Relation {
    /// `e <= 0`
    Le,
    /// `e < 0`
    Lt,
    /// `e = 0`
    Eq,
}

impl Relation {
    fn holds(self, value: &Rational) -> bool {
        match self {
            Relation::Le => !value.is_positive(),
            Relation::Lt => value.is_negative(),
            Relation::Eq => value.is_zero(),
        }
    }

    pub fn is_strict(self) -> bool {
        self == Relation::Lt
    }
}

/// A linear constraint `expr REL 0`, normalized so that the leading
/// coefficient (smallest [`VarId`]) has magnitude one; equalities are
/// further normalized to a leading coefficient of exactly `+1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    expr: AffineExpr,
    rel: Relation,
}

impl Atom {
    pub fn new(expr: AffineExpr, rel: Relation) -> Atom {
        let scale = match expr.leading() {
            None => None,
            Some((_, c)) => match rel {
                Relation::Eq => Some(c.recip()),
                _ => Some(c.abs().recip()),
            },
        };
        match scale {
            Some(s) if !s.is_one() => Atom { expr: expr.scale(&s), rel },
            _ => Atom { expr, rel },
        }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: &AffineExpr, rhs: &AffineExpr) -> Atom {
        Atom::new(lhs - rhs, Relation::Le)
    }

    /// `lhs < rhs`
    pub fn lt(lhs: &AffineExpr, rhs: &AffineExpr) -> Atom {
        Atom::new(lhs - rhs, Relation::Lt)
    }

    /// `lhs >= rhs`
    pub fn ge(lhs: &AffineExpr, rhs: &AffineExpr) -> Atom {
        Atom::new(rhs - lhs, Relation::Le)
    }

    /// `lhs > rhs`
    pub fn gt(lhs: &AffineExpr, rhs: &AffineExpr) -> Atom {
        Atom::new(rhs - lhs, Relation::Lt)
    }

    /// `lhs = rhs`
    pub fn eq(lhs: &AffineExpr, rhs: &AffineExpr) -> Atom {
        Atom::new(lhs - rhs, Relation::Eq)
    }

    /// The canonical false atom `1 <= 0`.
    pub fn falsum() -> Atom {
        Atom {
            expr: AffineExpr::constant(Rational::one()),
            rel: Relation::Le,
        }
    }

    pub fn expr(&self) -> &AffineExpr {
        &self.expr
    }

    pub fn relation(&self) -> Relation {
        self.rel
    }

    pub fn is_ground(&self) -> bool {
        self.expr.is_constant()
    }

    /// Truth value for atoms without variables.
    pub fn ground_value(&self) -> Option<bool> {
        self.is_ground().then(|| self.rel.holds(self.expr.constant_term()))
    }

    pub fn mentions(&self, v: VarId) -> bool {
        self.expr.contains(v)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.expr.vars()
    }

    /// The negation as a disjunction of at most two atoms.
    pub fn negate(&self) -> Vec<Atom> {
        let neg = -&self.expr;
        match self.rel {
            Relation::Le => vec![Atom::new(neg, Relation::Lt)],
            Relation::Lt => vec![Atom::new(neg, Relation::Le)],
            Relation::Eq => vec![
                Atom::new(self.expr.clone(), Relation::Lt),
                Atom::new(neg, Relation::Lt),
            ],
        }
    }

    pub fn substitute(&self, var: VarId, replacement: &AffineExpr) -> Result<Atom, FormulaError> {
        Ok(Atom::new(self.expr.substitute(var, replacement)?, self.rel))
    }

    pub(crate) fn substitute_unchecked(&self, var: VarId, replacement: &AffineExpr) -> Atom {
        if !self.expr.contains(var) {
            return self.clone();
        }
        Atom::new(self.expr.substitute_unchecked(var, replacement), self.rel)
    }

    pub fn eval_with<F>(&self, lookup: F) -> Result<bool, FormulaError>
    where
        F: FnMut(VarId) -> Option<Rational>,
    {
        Ok(self.rel.holds(&self.expr.eval_with(lookup)?))
    }

    pub fn eval(&self, point: &BTreeMap<VarId, Rational>) -> Result<bool, FormulaError> {
        self.eval_with(|v| point.get(&v).cloned())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        };
        write!(f, "{} {op} 0", self.expr)
    }
}

/// A conjunction of atoms. Duplicates are removed, trivially true atoms are
/// dropped, and any trivially false atom collapses the clause to FALSE
/// (represented by the single atom [`Atom::falsum`]).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    atoms: Vec<Atom>,
}

impl Clause {
    pub fn new<I: IntoIterator<Item = Atom>>(atoms: I) -> Clause {
        let mut out = Vec::new();
        for atom in atoms {
            match atom.ground_value() {
                Some(true) => {}
                Some(false) => return Clause::falsum(),
                None => out.push(atom),
            }
        }
        out.sort();
        out.dedup();
        Clause { atoms: out }
    }

    pub fn truth() -> Clause {
        Clause { atoms: Vec::new() }
    }

    pub fn falsum() -> Clause {
        Clause {
            atoms: vec![Atom::falsum()],
        }
    }

    pub fn is_false(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].ground_value() == Some(false)
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn and(&self, other: &Clause) -> Clause {
        if self.is_false() || other.is_false() {
            return Clause::falsum();
        }
        Clause::new(self.atoms.iter().chain(other.atoms.iter()).cloned())
    }

    pub fn with(&self, atom: Atom) -> Clause {
        Clause::new(self.atoms.iter().cloned().chain(std::iter::once(atom)))
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.atoms.iter().flat_map(|a| a.vars()).collect()
    }

    pub fn substitute(&self, var: VarId, replacement: &AffineExpr) -> Result<Clause, FormulaError> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| a.substitute(var, replacement))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Clause::new(atoms))
    }

    pub fn eval_with<F>(&self, mut lookup: F) -> Result<bool, FormulaError>
    where
        F: FnMut(VarId) -> Option<Rational>,
    {
        for atom in &self.atoms {
            if !atom.eval_with(&mut lookup)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn eval(&self, point: &BTreeMap<VarId, Rational>) -> Result<bool, FormulaError> {
        self.eval_with(|v| point.get(&v).cloned())
    }

    /// Negation as a DNF: one single-atom clause per negated atom.
    pub fn negate(&self) -> DnfFormula {
        DnfFormula::new(
            self.atoms
                .iter()
                .flat_map(|a| a.negate())
                .map(|a| Clause::new([a])),
        )
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_true() {
            return write!(f, "true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A disjunction of clauses. No clauses means FALSE; a single empty clause
/// means TRUE.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DnfFormula {
    clauses: Vec<Clause>,
}

impl DnfFormula {
    /// Builds a formula, dropping FALSE clauses and duplicate clauses
    /// (first occurrence wins, so order is preserved).
    pub fn new<I: IntoIterator<Item = Clause>>(clauses: I) -> DnfFormula {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in clauses {
            if c.is_false() {
                continue;
            }
            if c.is_true() {
                return DnfFormula::truth();
            }
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
        DnfFormula { clauses: out }
    }

    pub fn truth() -> DnfFormula {
        DnfFormula {
            clauses: vec![Clause::truth()],
        }
    }

    pub fn falsum() -> DnfFormula {
        DnfFormula { clauses: Vec::new() }
    }

    pub fn from_clause(clause: Clause) -> DnfFormula {
        DnfFormula::new([clause])
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> DnfFormula {
        DnfFormula::from_clause(Clause::new(atoms))
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn into_clauses(self) -> Vec<Clause> {
        self.clauses
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0].is_true()
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.clauses.iter().flat_map(|c| c.vars()).collect()
    }

    pub fn or(&self, other: &DnfFormula) -> DnfFormula {
        DnfFormula::new(self.clauses.iter().chain(other.clauses.iter()).cloned())
    }

    /// Distributes the conjunction over both disjunctions.
    pub fn and(&self, other: &DnfFormula) -> DnfFormula {
        let mut out = Vec::with_capacity(self.clauses.len() * other.clauses.len());
        for a in &self.clauses {
            for b in &other.clauses {
                out.push(a.and(b));
            }
        }
        DnfFormula::new(out)
    }

    pub fn and_clause(&self, clause: &Clause) -> DnfFormula {
        DnfFormula::new(self.clauses.iter().map(|c| c.and(clause)))
    }

    /// Syntactic negation into DNF (no satisfiability pruning).
    pub fn negate(&self) -> DnfFormula {
        self.clauses
            .iter()
            .fold(DnfFormula::truth(), |acc, c| acc.and(&c.negate()))
    }

    pub fn eval_with<F>(&self, mut lookup: F) -> Result<bool, FormulaError>
    where
        F: FnMut(VarId) -> Option<Rational>,
    {
        for c in &self.clauses {
            if c.eval_with(&mut lookup)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn eval(&self, point: &BTreeMap<VarId, Rational>) -> Result<bool, FormulaError> {
        self.eval_with(|v| point.get(&v).cloned())
    }
}

impl fmt::Display for DnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return write!(f, "false");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if self.clauses.len() > 1 && c.len() > 1 {
                write!(f, "({c})")?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}
