//! Fraction-free rows for the satisfiability hot path.
//!
//! A row `c . x + k REL 0` has integer entries divided by their common gcd,
//! so combinations never need rational normalization.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::formula::{Atom, Relation, VarId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Row {
    pub c: Vec<BigInt>,
    pub k: BigInt,
    pub rel: Relation,
}

/// Column assignment for the variables of a set of atoms.
pub(crate) fn columns<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeMap<VarId, usize> {
    let mut cols = BTreeMap::new();
    for a in atoms {
        for v in a.vars() {
            let next = cols.len();
            cols.entry(v).or_insert(next);
        }
    }
    cols
}

impl Row {
    pub fn from_atom(atom: &Atom, cols: &BTreeMap<VarId, usize>) -> Row {
        let expr = atom.expr();
        let mut lcm = expr.constant_term().denom().clone();
        for (_, c) in expr.terms() {
            lcm = lcm.lcm(c.denom());
        }
        let scale = |r: &crate::rational::Rational| r.numer() * (&lcm / r.denom());
        let mut c = vec![BigInt::zero(); cols.len()];
        for (v, coef) in expr.terms() {
            c[cols[v]] = scale(coef);
        }
        let mut row = Row {
            c,
            k: scale(expr.constant_term()),
            rel: atom.relation(),
        };
        row.normalize();
        row
    }

    pub fn normalize(&mut self) {
        let mut g = self.k.abs();
        for v in &self.c {
            if g.is_one() {
                break;
            }
            if !v.is_zero() {
                g = g.gcd(v);
            }
        }
        if !g.is_zero() && !g.is_one() {
            for v in self.c.iter_mut() {
                *v /= &g;
            }
            self.k /= &g;
        }
        if self.rel == Relation::Eq {
            let lead_negative = self.c.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative());
            if lead_negative {
                for v in self.c.iter_mut() {
                    *v = -&*v;
                }
                self.k = -&self.k;
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.c.iter().all(|v| v.is_zero())
    }

    /// Truth value of a ground row.
    pub fn ground_holds(&self) -> bool {
        match self.rel {
            Relation::Le => !self.k.is_positive(),
            Relation::Lt => self.k.is_negative(),
            Relation::Eq => self.k.is_zero(),
        }
    }

    /// The negation as a disjunction of rows.
    pub fn negated(&self) -> Vec<Row> {
        let flip = |rel| Row {
            c: self.c.iter().map(|v| -v).collect(),
            k: -&self.k,
            rel,
        };
        match self.rel {
            Relation::Le => vec![flip(Relation::Lt)],
            Relation::Lt => vec![flip(Relation::Le)],
            Relation::Eq => vec![
                Row {
                    rel: Relation::Lt,
                    ..self.clone()
                },
                flip(Relation::Lt),
            ],
        }
    }

    /// `self * a + other * b`, normalized.
    pub fn combine(&self, a: &BigInt, other: &Row, b: &BigInt, rel: Relation) -> Row {
        let mut row = Row {
            c: self.c.iter().zip(&other.c).map(|(x, y)| x * a + y * b).collect(),
            k: &self.k * a + &other.k * b,
            rel,
        };
        row.normalize();
        row
    }
}

/// Substitutes away every equality row. Returns `None` on a ground
/// contradiction.
pub(crate) fn eliminate_equalities(mut rows: Vec<Row>) -> Option<Vec<Row>> {
    while let Some(pos) = rows.iter().position(|r| r.rel == Relation::Eq && !r.is_ground()) {
        let eq = rows.swap_remove(pos);
        let col = (0..eq.c.len())
            .filter(|j| !eq.c[*j].is_zero())
            .min_by_key(|j| rows.iter().filter(|r| !r.c[*j].is_zero()).count())
            .expect("non-ground");
        let e = eq.c[col].clone();
        // keep the multiplier on inequalities positive
        let (scale_row, scale_eq_sign) = if e.is_positive() { (e.clone(), -BigInt::one()) } else { (-e.clone(), BigInt::one()) };
        for r in rows.iter_mut() {
            if r.c[col].is_zero() {
                continue;
            }
            let factor = &r.c[col] * &scale_eq_sign;
            *r = r.combine(&scale_row, &eq, &factor, r.rel);
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        if r.is_ground() {
            if !r.ground_holds() {
                return None;
            }
        } else {
            out.push(r);
        }
    }
    Some(out)
}
