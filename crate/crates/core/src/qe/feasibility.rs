//! Satisfiability of a single conjunction by eliminating every variable.
//!
//! Equalities are removed first by substitution. The remaining
//! inequalities go through Fourier-Motzkin with Chernikov's history rule:
//! after `k` eliminations a derived row built from more than `k + 1`
//! original rows is implied by the others and is dropped. No other pruning
//! is mixed in here, since the history rule is only valid for the plain
//! sequence of combinations.

use num_traits::Signed;

use super::budget::{Limits, QeError, QeStats};
use super::introw::{columns, eliminate_equalities, Row};
use crate::formula::{AffineExpr, Atom, Relation, VarId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct History(Vec<u64>);

impl History {
    fn single(i: usize, width: usize) -> History {
        let mut words = vec![0u64; width.div_ceil(64).max(1)];
        words[i / 64] |= 1 << (i % 64);
        History(words)
    }

    fn union(&self, other: &History) -> History {
        History(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
}

/// For `c*v + rest = 0`, returns `-rest / c`.
pub(crate) fn solve_for(eq: &Atom, v: VarId) -> AffineExpr {
    let c = eq.expr().coeff(v);
    let mut rest = eq.expr().clone();
    rest.add_term(v, -c.clone());
    rest.scale(&(-c.recip()))
}

/// Decides whether the conjunction of `atoms` has a real solution.
pub(crate) fn conjunction_satisfiable(
    atoms: Vec<Atom>,
    limits: &Limits,
    stats: &mut QeStats,
) -> Result<bool, QeError> {
    let cols = columns(&atoms);
    let rows = atoms.iter().map(|a| Row::from_atom(a, &cols)).collect();
    rows_satisfiable(rows, limits, stats)
}

/// [`conjunction_satisfiable`] on rows sharing one column layout.
pub(crate) fn rows_satisfiable(rows: Vec<Row>, limits: &Limits, stats: &mut QeStats) -> Result<bool, QeError> {
    let Some(rows) = eliminate_equalities(rows) else {
        return Ok(false);
    };
    let width = rows.len();
    let mut rows: Vec<(Row, History)> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, History::single(i, width)))
        .collect();

    let mut eliminated = 0u32;
    loop {
        limits.check_time(stats)?;
        limits.check_atoms(rows.len(), stats)?;
        // Ground rows decide themselves; identical rows keep the smaller history.
        let mut live = Vec::with_capacity(rows.len());
        for (r, h) in rows {
            if r.is_ground() {
                if !r.ground_holds() {
                    return Ok(false);
                }
            } else {
                live.push((r, h));
            }
        }
        live.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.count().cmp(&b.1.count())));
        live.dedup_by(|later, earlier| later.0 == earlier.0);
        rows = live;

        let Some(col) = pick_column(&rows) else {
            return Ok(true);
        };
        eliminated += 1;
        stats.eliminations += 1;
        let mut lowers = Vec::new();
        let mut uppers = Vec::new();
        let mut next = Vec::new();
        for r in rows {
            let c = &r.0.c[col];
            if c.is_positive() {
                uppers.push(r);
            } else if c.is_negative() {
                lowers.push(r);
            } else {
                next.push(r);
            }
        }
        for (l, lh) in &lowers {
            for (u, uh) in &uppers {
                let hist = lh.union(uh);
                if hist.count() > eliminated + 1 {
                    stats.atoms_pruned += 1;
                    continue;
                }
                let rel = if l.rel == Relation::Lt || u.rel == Relation::Lt {
                    Relation::Lt
                } else {
                    Relation::Le
                };
                // u.c > 0, l.c < 0
                let row = l.combine(&u.c[col], u, &(-&l.c[col]), rel);
                next.push((row, hist));
            }
        }
        rows = next;
    }
}

fn pick_column(rows: &[(Row, History)]) -> Option<usize> {
    let width = rows.first()?.0.c.len();
    (0..width)
        .filter_map(|j| {
            let (mut lo, mut up) = (0usize, 0usize);
            for (r, _) in rows {
                if r.c[j].is_positive() {
                    up += 1;
                } else if r.c[j].is_negative() {
                    lo += 1;
                }
            }
            (lo + up > 0).then_some(((lo * up, lo + up, j), j))
        })
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, j)| j)
}
