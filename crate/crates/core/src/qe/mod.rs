//! Quantifier elimination for linear real arithmetic.
//!
//! Existential quantifiers distribute over the clauses of a DNF formula, so
//! each clause is projected independently: equalities are used for
//! substitution first, then Fourier-Motzkin eliminates the remaining
//! variables with redundancy pruning between steps. Universal quantifiers
//! go through double negation.

mod budget;
mod feasibility;
mod introw;
mod project;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use rayon::prelude::*;

pub use budget::{EliminationBudget, QeError, QeStats};
pub(crate) use budget::Limits;

use crate::formula::{AffineExpr, Clause, DnfFormula, Interval, Relation, VarId};
use crate::rational::Rational;
use project::{bounds_of, eliminate_one, project_clause, prune_implied, simplify, ProjectOptions};

/// A result together with the counters gathered while computing it.
#[derive(Clone, Debug, PartialEq)]
pub struct QeOutcome<T> {
    pub value: T,
    pub stats: QeStats,
}

/// Eliminates one variable from a clause (a single substitution or
/// Fourier-Motzkin step, followed by syntactic simplification).
pub fn fm_eliminate_var(
    clause: &Clause,
    var: VarId,
    budget: &EliminationBudget,
) -> Result<Clause, QeError> {
    let limits = budget.start();
    let mut stats = QeStats::default();
    let out = project::eliminate_one(clause.atoms().to_vec(), var, &mut stats);
    let out = match out {
        Some(atoms) => atoms,
        None => return Ok(Clause::falsum()),
    };
    limits.check_atoms(out.len(), &stats)?;
    Ok(Clause::new(out))
}

/// Returns a clause with the same solution set and no atom implied by the
/// others. Equalities are kept. If the budget runs out part way, the
/// atoms not yet examined are kept as they are.
pub fn remove_redundant(clause: &Clause, budget: &EliminationBudget) -> Clause {
    let limits = budget.start();
    let mut stats = QeStats::default();
    let Some(atoms) = simplify(clause.atoms().to_vec(), &mut stats) else {
        return Clause::falsum();
    };
    match prune_implied(atoms.clone(), &limits, &mut stats) {
        Ok(pruned) => Clause::new(pruned),
        Err(_) => Clause::new(atoms),
    }
}

/// Whether the conjunction has a real solution, decided by eliminating
/// every variable and inspecting the ground residue.
pub fn clause_satisfiable(clause: &Clause) -> bool {
    try_clause_satisfiable(clause, &EliminationBudget::unlimited())
        .expect("unlimited budget cannot be exceeded")
}

pub fn try_clause_satisfiable(clause: &Clause, budget: &EliminationBudget) -> Result<bool, QeError> {
    if clause.is_false() {
        return Ok(false);
    }
    let limits = budget.start();
    let mut stats = QeStats::default();
    feasibility::conjunction_satisfiable(clause.atoms().to_vec(), &limits, &mut stats)
}

pub(crate) fn satisfiable_with(clause: &Clause, limits: &Limits) -> Result<bool, QeError> {
    if clause.is_false() {
        return Ok(false);
    }
    let mut stats = QeStats::default();
    feasibility::conjunction_satisfiable(clause.atoms().to_vec(), limits, &mut stats)
}

/// `exists vars. formula`, as a DNF over the remaining variables.
///
/// Clauses are projected independently (in parallel on the current rayon
/// pool). The order of `vars` breaks ties in the elimination heuristic only;
/// the solution set of the result does not depend on it.
pub fn eliminate_existential(
    formula: &DnfFormula,
    vars: &[VarId],
    budget: &EliminationBudget,
) -> Result<QeOutcome<DnfFormula>, QeError> {
    let limits = budget.start();
    eliminate_existential_with(formula, vars, &limits)
}

pub(crate) fn eliminate_existential_with(
    formula: &DnfFormula,
    vars: &[VarId],
    limits: &Limits,
) -> Result<QeOutcome<DnfFormula>, QeError> {
    limits.check_clauses(formula.clauses().len(), &QeStats::default())?;
    let results: Vec<Result<(Clause, QeStats), QeError>> = formula
        .clauses()
        .par_iter()
        .map(|clause| {
            let mut stats = QeStats::default();
            limits.check_time(&stats)?;
            let c = project_clause(clause, vars, limits, ProjectOptions::default(), &mut stats)?;
            Ok((c, stats))
        })
        .collect();
    let mut stats = QeStats::default();
    let mut clauses = Vec::with_capacity(results.len());
    for r in results {
        let (c, s) = r?;
        stats.merge(&s);
        clauses.push(c);
    }
    let value = DnfFormula::new(clauses);
    stats.clauses_produced += value.clauses().len();
    Ok(QeOutcome {
        value,
        stats: limits.stamp(&stats),
    })
}

/// Negation of a DNF with every produced clause simplified and checked for
/// satisfiability as it is built, so infeasible combinations never
/// accumulate.
pub(crate) fn negate_pruned(
    formula: &DnfFormula,
    limits: &Limits,
    stats: &mut QeStats,
) -> Result<DnfFormula, QeError> {
    let mut acc: Vec<Clause> = vec![Clause::truth()];
    for clause in formula.clauses() {
        let negated = clause.negate();
        let mut next = Vec::new();
        let mut seen = BTreeSet::new();
        for a in &acc {
            for n in negated.clauses() {
                limits.check_time(stats)?;
                let joined = a.and(n);
                let Some(atoms) = simplify(joined.atoms().to_vec(), stats) else {
                    continue;
                };
                let joined = Clause::new(atoms);
                if joined.is_false() || !satisfiable_with(&joined, limits)? {
                    continue;
                }
                if seen.insert(joined.clone()) {
                    next.push(joined);
                }
            }
        }
        limits.check_clauses(next.len(), stats)?;
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Ok(DnfFormula::new(acc))
}

/// `forall quantified. (antecedent => consequent)`, computed as
/// `not exists quantified. (antecedent and not consequent)`.
pub fn eliminate_universal_implication(
    antecedent: &DnfFormula,
    consequent: &DnfFormula,
    quantified: &[VarId],
    budget: &EliminationBudget,
) -> Result<QeOutcome<DnfFormula>, QeError> {
    let limits = budget.start();
    let mut stats = QeStats::default();
    let violation_side = negate_pruned(consequent, &limits, &mut stats)?;
    limits.check_clauses(
        antecedent.clauses().len().saturating_mul(violation_side.clauses().len()),
        &stats,
    )?;
    let body = antecedent.and(&violation_side);
    let projected = eliminate_existential_with(&body, quantified, &limits)?;
    stats.merge(&projected.stats);
    let value = negate_pruned(&projected.value, &limits, &mut stats)?;
    stats.clauses_produced += value.clauses().len();
    Ok(QeOutcome {
        value,
        stats: limits.stamp(&stats),
    })
}

/// The exact range of `var` over the solutions of `formula`: every other
/// variable is eliminated, each clause yields an interval and the result
/// is their hull.
pub fn variable_range(
    formula: &DnfFormula,
    var: VarId,
    budget: &EliminationBudget,
) -> Result<QeOutcome<Interval>, QeError> {
    let limits = budget.start();
    variable_range_with(formula, var, &limits)
}

pub(crate) fn variable_range_with(
    formula: &DnfFormula,
    var: VarId,
    limits: &Limits,
) -> Result<QeOutcome<Interval>, QeError> {
    let others: Vec<VarId> = formula.vars().into_iter().filter(|v| *v != var).collect();
    let projected = eliminate_existential_with(formula, &others, limits)?;
    let mut hull: Option<Interval> = None;
    for clause in projected.value.clauses() {
        let iv = bounds_of(clause, var);
        hull = Some(match hull {
            None => iv,
            Some(h) => h.hull(&iv),
        });
    }
    match hull {
        Some(value) => Ok(QeOutcome {
            value,
            stats: projected.stats,
        }),
        None => Err(QeError::EmptyRange),
    }
}

/// `a and b` in DNF, keeping only satisfiable clauses.
pub(crate) fn conjoin_feasible(
    a: &DnfFormula,
    b: &DnfFormula,
    limits: &Limits,
) -> Result<(DnfFormula, QeStats), QeError> {
    let results: Vec<Result<(Vec<Clause>, QeStats), QeError>> = a
        .clauses()
        .par_iter()
        .map(|left| {
            let mut stats = QeStats::default();
            let mut kept = Vec::new();
            for right in b.clauses() {
                limits.check_time(&stats)?;
                let Some(atoms) = simplify(left.and(right).into_atoms(), &mut stats) else {
                    continue;
                };
                let joined = Clause::new(atoms);
                if !joined.is_false() && satisfiable_with(&joined, limits)? {
                    kept.push(joined);
                }
            }
            Ok((kept, stats))
        })
        .collect();
    let mut stats = QeStats::default();
    let mut clauses = Vec::new();
    for r in results {
        let (c, s) = r?;
        stats.merge(&s);
        clauses.extend(c);
        limits.check_clauses(clauses.len(), &stats)?;
    }
    let value = DnfFormula::new(clauses);
    stats.clauses_produced += value.clauses().len();
    Ok((value, stats))
}

/// A rational point satisfying `clause`, or `None` if it is unsatisfiable.
///
/// Variables are projected out one at a time and then assigned in reverse
/// order, each inside the interval its projection stage allows.
pub fn clause_witness(
    clause: &Clause,
    budget: &EliminationBudget,
) -> Result<Option<BTreeMap<VarId, Rational>>, QeError> {
    if clause.is_false() {
        return Ok(None);
    }
    let limits = budget.start();
    let mut stats = QeStats::default();
    let Some(first) = simplify(clause.atoms().to_vec(), &mut stats) else {
        return Ok(None);
    };
    let order: Vec<VarId> = clause.vars().into_iter().collect();
    let mut stages = vec![first];
    for &v in &order {
        limits.check_time(&stats)?;
        let current = stages.last().expect("non-empty").clone();
        let Some(mut next) = eliminate_one(current, v, &mut stats) else {
            return Ok(None);
        };
        limits.check_atoms(next.len(), &stats)?;
        if next.len() > ProjectOptions::default().prune_above {
            next = prune_implied(next, &limits, &mut stats)?;
        }
        stages.push(next);
    }
    let mut point: BTreeMap<VarId, Rational> = BTreeMap::new();
    for (i, &v) in order.iter().enumerate().rev() {
        let mut lower: Option<(Rational, bool)> = None;
        let mut upper: Option<(Rational, bool)> = None;
        let mut exact: Option<Rational> = None;
        for atom in &stages[i] {
            let mut expr = atom.expr().clone();
            for (w, val) in &point {
                if expr.contains(*w) {
                    expr = expr.substitute_unchecked(*w, &AffineExpr::constant(val.clone()));
                }
            }
            let c = expr.coeff(v);
            if c.is_zero() {
                continue;
            }
            let bound = -expr.constant_term() / &c;
            let strict = atom.relation() == Relation::Lt;
            match atom.relation() {
                Relation::Eq => exact = Some(bound),
                _ if c.is_positive() => {
                    if upper.as_ref().is_none_or(|(u, s)| bound < *u || (bound == *u && strict && !s)) {
                        upper = Some((bound, strict));
                    }
                }
                _ => {
                    if lower.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s)) {
                        lower = Some((bound, strict));
                    }
                }
            }
        }
        let value = match (exact, lower, upper) {
            (Some(x), _, _) => x,
            (None, Some((l, _)), Some((u, _))) if l == u => l,
            (None, Some((l, _)), Some((u, _))) => (l + u) / Rational::from_integer(2.into()),
            (None, Some((l, _)), None) => l + Rational::one(),
            (None, None, Some((u, _))) => u - Rational::one(),
            (None, None, None) => Rational::zero(),
        };
        point.insert(v, value);
    }
    debug_assert!(clause.eval(&point).unwrap_or(false));
    Ok(Some(point))
}
