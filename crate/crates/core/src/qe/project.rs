//! Projection of one conjunction onto a subset of its variables.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::budget::{Limits, QeError, QeStats};
use super::feasibility::{rows_satisfiable, solve_for};
use super::introw::{columns, Row};
use crate::formula::{AffineExpr, Atom, Clause, Relation, VarId};
use crate::rational::Rational;

#[derive(Default)]
struct Group {
    eq: Option<Rational>,
    eq_conflict: bool,
    lower: Option<(Rational, bool)>,
    upper: Option<(Rational, bool)>,
}

/// Merges atoms that constrain the same linear form: keeps the tightest
/// lower and upper bound, turns matching closed bounds into an equality and
/// detects contradictions. Returns `None` when the conjunction is
/// syntactically infeasible.
pub(crate) fn simplify(atoms: Vec<Atom>, stats: &mut QeStats) -> Option<Vec<Atom>> {
    let before = atoms.len();
    let mut groups: BTreeMap<AffineExpr, Group> = BTreeMap::new();
    for atom in atoms {
        if let Some(truth) = atom.ground_value() {
            if truth {
                continue;
            }
            return None;
        }
        let (_, lead) = atom.expr().leading().expect("non-ground");
        let sign = if lead.is_positive() {
            Rational::one()
        } else {
            -Rational::one()
        };
        let k = atom.expr().constant_term().clone();
        let mut form = atom.expr().scale(&sign);
        let shift = -form.constant_term().clone();
        form.add_constant(&shift);
        let g = groups.entry(form).or_default();
        // atom reads  sign*L + k  REL 0
        match atom.relation() {
            Relation::Eq => {
                let v = -k;
                match &g.eq {
                    Some(old) if *old != v => g.eq_conflict = true,
                    _ => g.eq = Some(v),
                }
            }
            rel => {
                let strict = rel == Relation::Lt;
                if sign.is_positive() {
                    let bound = -k;
                    let tighter = match &g.upper {
                        None => true,
                        Some((b, s)) => bound < *b || (bound == *b && strict && !s),
                    };
                    if tighter {
                        g.upper = Some((bound, strict));
                    }
                } else {
                    let bound = k;
                    let tighter = match &g.lower {
                        None => true,
                        Some((b, s)) => bound > *b || (bound == *b && strict && !s),
                    };
                    if tighter {
                        g.lower = Some((bound, strict));
                    }
                }
            }
        }
    }

    let mut out = Vec::with_capacity(groups.len() * 2);
    for (form, g) in groups {
        if g.eq_conflict {
            return None;
        }
        let with_const = |c: &Rational| {
            let mut e = form.clone();
            e.add_constant(c);
            e
        };
        if let Some(v) = g.eq {
            if let Some((lo, strict)) = &g.lower {
                if v < *lo || (v == *lo && *strict) {
                    return None;
                }
            }
            if let Some((hi, strict)) = &g.upper {
                if v > *hi || (v == *hi && *strict) {
                    return None;
                }
            }
            out.push(Atom::new(with_const(&-v), Relation::Eq));
            continue;
        }
        match (g.lower, g.upper) {
            (Some((lo, ls)), Some((hi, hs))) if lo > hi || (lo == hi && (ls || hs)) => return None,
            (Some((lo, _)), Some((hi, _))) if lo == hi => {
                out.push(Atom::new(with_const(&-lo), Relation::Eq));
            }
            (lower, upper) => {
                if let Some((lo, strict)) = lower {
                    // -L + lo REL 0
                    let e = with_const(&-lo.clone()).scale(&-Rational::one());
                    out.push(Atom::new(e, rel_of(strict)));
                }
                if let Some((hi, strict)) = upper {
                    out.push(Atom::new(with_const(&-hi), rel_of(strict)));
                }
            }
        }
    }
    stats.atoms_pruned += before.saturating_sub(out.len());
    Some(out)
}

fn rel_of(strict: bool) -> Relation {
    if strict {
        Relation::Lt
    } else {
        Relation::Le
    }
}

/// Substitutes the equality `eq` solved for `var` into all other atoms.
fn gauss_step(atoms: Vec<Atom>, eq_index: usize, var: VarId) -> Vec<Atom> {
    let mut atoms = atoms;
    let eq = atoms.swap_remove(eq_index);
    let replacement = solve_for(&eq, var);
    atoms
        .iter()
        .map(|a| a.substitute_unchecked(var, &replacement))
        .collect()
}

/// Pairs every lower bound on `var` with every upper bound.
fn fm_step(atoms: Vec<Atom>, var: VarId) -> Vec<Atom> {
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    let mut out = Vec::new();
    for a in atoms {
        match a.expr().coeff_ref(var) {
            Some(c) if c.is_positive() => uppers.push(a),
            Some(_) => lowers.push(a),
            None => out.push(a),
        }
    }
    for l in &lowers {
        let cl = l.expr().coeff(var);
        for u in &uppers {
            let cu = u.expr().coeff(var);
            let mut expr = u.expr().scale(&(-cl.clone()));
            expr.add_scaled(l.expr(), &cu);
            let strict = l.relation().is_strict() || u.relation().is_strict();
            out.push(Atom::new(expr, rel_of(strict)));
        }
    }
    out
}

fn find_equality(atoms: &[Atom], var: VarId) -> Option<usize> {
    atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.relation() == Relation::Eq && a.mentions(var))
        .min_by_key(|(_, a)| a.expr().num_vars())
        .map(|(i, _)| i)
}

/// One elimination step on `var`: substitution through an equality when
/// one mentions `var`, Fourier-Motzkin otherwise, followed by syntactic
/// simplification.
pub(crate) fn eliminate_one(atoms: Vec<Atom>, var: VarId, stats: &mut QeStats) -> Option<Vec<Atom>> {
    stats.eliminations += 1;
    let next = match find_equality(&atoms, var) {
        Some(i) => gauss_step(atoms, i, var),
        None => fm_step(atoms, var),
    };
    simplify(next, stats)
}

/// Drops every inequality implied by the remaining atoms. Multi-variable
/// atoms implied by the single-variable bounds go first, cheaply; every
/// other test asserts the atom's negation against the others and checks
/// infeasibility. A resource blowup inside a single test keeps the atom.
pub(crate) fn prune_implied(
    atoms: Vec<Atom>,
    limits: &Limits,
    stats: &mut QeStats,
) -> Result<Vec<Atom>, QeError> {
    let bounds = single_var_bounds(&atoms);
    let mut keep: Vec<bool> = atoms
        .iter()
        .map(|a| a.relation() == Relation::Eq || a.expr().num_vars() < 2 || !implied_by_bounds(a, &bounds))
        .collect();
    stats.atoms_pruned += keep.iter().filter(|k| !**k).count();
    let cols = columns(&atoms);
    let rows: Vec<Row> = atoms.iter().map(|a| Row::from_atom(a, &cols)).collect();
    for i in 0..atoms.len() {
        if !keep[i] || atoms[i].relation() == Relation::Eq {
            continue;
        }
        let mut probe: Vec<Row> = (0..rows.len())
            .filter(|j| *j != i && keep[*j])
            .map(|j| rows[j].clone())
            .collect();
        if probe.is_empty() {
            continue;
        }
        probe.extend(rows[i].negated());
        match rows_satisfiable(probe, limits, stats) {
            Ok(false) => {
                keep[i] = false;
                stats.atoms_pruned += 1;
            }
            Ok(true) | Err(QeError::Blowup { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(atoms.into_iter().zip(keep).filter(|(_, k)| *k).map(|(a, _)| a).collect())
}

type Bound = Option<(Rational, bool)>;

/// Tightest `(lower, upper)` bound per variable from single-variable atoms.
fn single_var_bounds(atoms: &[Atom]) -> BTreeMap<VarId, (Bound, Bound)> {
    let mut out: BTreeMap<VarId, (Bound, Bound)> = BTreeMap::new();
    for a in atoms {
        if a.expr().num_vars() != 1 {
            continue;
        }
        let (v, c) = a.expr().leading().expect("one variable");
        let value = -a.expr().constant_term() / c;
        let strict = a.relation() == Relation::Lt;
        let entry = out.entry(v).or_default();
        let upper = a.relation() == Relation::Eq || c.is_positive();
        let lower = a.relation() == Relation::Eq || c.is_negative();
        if upper && entry.1.as_ref().is_none_or(|(u, s)| value < *u || (value == *u && strict && !s)) {
            entry.1 = Some((value.clone(), strict));
        }
        if lower && entry.0.as_ref().is_none_or(|(l, s)| value > *l || (value == *l && strict && !s)) {
            entry.0 = Some((value, strict));
        }
    }
    out
}

/// Whether the supremum of the atom's expression over the bounds already
/// satisfies the atom.
fn implied_by_bounds(atom: &Atom, bounds: &BTreeMap<VarId, (Bound, Bound)>) -> bool {
    let mut sup = atom.expr().constant_term().clone();
    for (v, c) in atom.expr().terms() {
        let Some((lo, hi)) = bounds.get(v) else {
            return false;
        };
        let side = if c.is_positive() { hi } else { lo };
        match side {
            Some((b, _)) => sup += c * b,
            None => return false,
        }
    }
    match atom.relation() {
        Relation::Le => !sup.is_positive(),
        Relation::Lt => sup.is_negative(),
        Relation::Eq => false,
    }
}

/// Chooses the next variable to eliminate: any variable with an equality
/// first, otherwise the one with the fewest lower-times-upper bound pairs.
/// Ties fall back to the caller's order.
fn choose(atoms: &[Atom], pending: &[VarId]) -> Option<VarId> {
    let present: BTreeSet<VarId> = atoms.iter().flat_map(|a| a.vars()).collect();
    let candidates: Vec<(usize, VarId)> = pending
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| present.contains(v))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let with_eq = candidates.iter().filter_map(|(rank, v)| {
        let idx = find_equality(atoms, *v)?;
        let occurrences = atoms.iter().filter(|a| a.mentions(*v)).count();
        Some(((atoms[idx].expr().num_vars(), occurrences, *rank), *v))
    });
    if let Some((_, v)) = with_eq.min_by(|a, b| a.0.cmp(&b.0)) {
        return Some(v);
    }
    candidates
        .iter()
        .map(|(rank, v)| {
            let (mut lo, mut up) = (0usize, 0usize);
            for a in atoms {
                if let Some(c) = a.expr().coeff_ref(*v) {
                    if c.is_positive() {
                        up += 1;
                    } else {
                        lo += 1;
                    }
                }
            }
            ((lo * up, lo + up, *rank), *v)
        })
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, v)| v)
}

/// Options for projecting a clause.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ProjectOptions {
    /// Run implication-based pruning after each Fourier-Motzkin step once
    /// the clause has more atoms than this.
    pub prune_above: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions { prune_above: 4 }
    }
}

/// Existentially eliminates `vars` from one clause.
pub(crate) fn project_clause(
    clause: &Clause,
    vars: &[VarId],
    limits: &Limits,
    options: ProjectOptions,
    stats: &mut QeStats,
) -> Result<Clause, QeError> {
    if clause.is_false() {
        return Ok(Clause::falsum());
    }
    let Some(mut atoms) = simplify(clause.atoms().to_vec(), stats) else {
        return Ok(Clause::falsum());
    };
    while let Some(var) = choose(&atoms, vars) {
        limits.check_time(stats)?;
        let used_fm = find_equality(&atoms, var).is_none();
        atoms = match eliminate_one(atoms, var, stats) {
            Some(a) => a,
            None => return Ok(Clause::falsum()),
        };
        limits.check_atoms(atoms.len(), stats)?;
        if used_fm && atoms.len() > options.prune_above {
            atoms = prune_implied(atoms, limits, stats)?;
        }
    }
    Ok(Clause::new(atoms))
}

/// Reads the tightest bounds on `var` from a clause mentioning only `var`.
pub(crate) fn bounds_of(clause: &Clause, var: VarId) -> crate::formula::Interval {
    let mut lower: Option<(Rational, bool)> = None;
    let mut upper: Option<(Rational, bool)> = None;
    for atom in clause.atoms() {
        let c = atom.expr().coeff(var);
        debug_assert!(!c.is_zero() && atom.expr().num_vars() == 1);
        // c*v + k REL 0  ->  v REL' -k/c
        let bound = -atom.expr().constant_term() / &c;
        let strict = atom.relation().is_strict();
        let mut tighten_upper = |b: Rational, s: bool| {
            if upper.as_ref().is_none_or(|(u, us)| b < *u || (b == *u && s && !us)) {
                upper = Some((b, s));
            }
        };
        match atom.relation() {
            Relation::Eq => {
                tighten_upper(bound.clone(), false);
                if lower.as_ref().is_none_or(|(l, _)| bound > *l) {
                    lower = Some((bound, false));
                }
            }
            _ if c.is_positive() => tighten_upper(bound, strict),
            _ => {
                if lower.as_ref().is_none_or(|(l, ls)| bound > *l || (bound == *l && strict && !ls)) {
                    lower = Some((bound, strict));
                }
            }
        }
    }
    let (lower, lower_open) = lower.map_or((None, false), |(v, s)| (Some(v), s));
    let (upper, upper_open) = upper.map_or((None, false), |(v, s)| (Some(v), s));
    crate::formula::Interval {
        lower,
        upper,
        lower_open,
        upper_open,
    }
}
