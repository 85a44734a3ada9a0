//! Test-side oracles. Nothing here calls into the library's elimination or
//! propagation code; only network accessors and exact evaluation are used.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use qenet::formula::{AffineExpr, Atom, Clause, DnfFormula, InputBox, Interval, Relation, VarId};
use qenet::network::Network;
use qenet::rational::Rational;
use rand::Rng;

pub type Q = Rational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// ---------------------------------------------------------------------------
// Random networks and boxes

/// A rational in `[-bound, bound]` with a small random denominator.
pub fn small_rational<R: Rng>(rng: &mut R, bound: i64) -> Q {
    let d = rng.gen_range(1..=8);
    q(rng.gen_range(-bound * d..=bound * d), d)
}

/// `hidden` lists the hidden layer sizes; weights lie in `[-2, 2]` and
/// biases in `[-1, 1]`.
pub fn random_network<R: Rng>(rng: &mut R, inputs: usize, hidden: &[usize], outputs: usize) -> Network {
    let mut sizes = vec![inputs];
    sizes.extend_from_slice(hidden);
    sizes.push(outputs);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in sizes.windows(2) {
        weights.push(
            (0..w[1])
                .map(|_| (0..w[0]).map(|_| small_rational(rng, 2)).collect())
                .collect(),
        );
        biases.push((0..w[1]).map(|_| small_rational(rng, 1)).collect());
    }
    Network::from_layers("random", weights, biases).unwrap()
}

/// Input dim 1..=3, 1..=3 hidden layers of 1..=4 neurons (at most 12).
pub fn random_desk_network<R: Rng>(rng: &mut R) -> Network {
    let inputs = rng.gen_range(1..=3);
    let layers = rng.gen_range(1..=3);
    let hidden: Vec<usize> = (0..layers).map(|_| rng.gen_range(1..=4)).collect();
    let outputs = rng.gen_range(1..=3);
    random_network(rng, inputs, &hidden, outputs)
}

pub fn random_box<R: Rng>(rng: &mut R, dim: usize) -> InputBox {
    InputBox::new(
        (0..dim)
            .map(|_| {
                let lo = q(rng.gen_range(-16..=12), 8);
                let width = q(rng.gen_range(1..=16), 8);
                (lo.clone(), lo + width)
            })
            .collect(),
    )
    .unwrap()
}

/// Exact point on the `2^20` grid of the box, endpoints included.
pub fn sample_point<R: Rng>(rng: &mut R, b: &InputBox) -> Vec<Q> {
    const GRID: i64 = 1 << 20;
    b.bounds()
        .iter()
        .map(|(lo, hi)| lo + (hi - lo) * q(rng.gen_range(0..=GRID), GRID))
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force range oracle: enumerate activation patterns; for each
// feasible pattern the output is affine on a polytope whose extreme values
// sit at vertices, found by solving every d x d subsystem of the
// constraints exactly.

/// `c . x + k`
#[derive(Clone, Debug)]
struct Aff {
    c: Vec<Q>,
    k: Q,
}

impl Aff {
    fn eval(&self, x: &[Q]) -> Q {
        self.c.iter().zip(x).fold(self.k.clone(), |acc, (c, v)| acc + c * v)
    }
}

/// Constraints `c . x + k <= 0`.
fn vertices(cons: &[Aff], d: usize) -> Vec<Vec<Q>> {
    let mut out: Vec<Vec<Q>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    if cons.len() < d {
        return out;
    }
    loop {
        if let Some(x) = solve(cons, &idx, d) {
            if cons.iter().all(|a| !a.eval(&x).is_positive()) && !out.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < cons.len() - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Unique solution of `c_i . x = -k_i` for the chosen rows, if any.
fn solve(cons: &[Aff], rows: &[usize], d: usize) -> Option<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|&r| {
            let mut row = cons[r].c.clone();
            row.push(-cons[r].k.clone());
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v /= &p;
        }
        let pivot = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[d].clone()).collect())
}

fn extremes(f: &Aff, verts: &[Vec<Q>]) -> (Q, Q) {
    let vals: Vec<Q> = verts.iter().map(|v| f.eval(v)).collect();
    (
        vals.iter().min().unwrap().clone(),
        vals.iter().max().unwrap().clone(),
    )
}

/// Exact output ranges over `b` by activation-pattern enumeration.
pub fn brute_force_ranges(net: &Network, b: &InputBox) -> Vec<Interval> {
    let d = net.input_dim();
    let mut cons = Vec::new();
    for (i, (lo, hi)) in b.bounds().iter().enumerate() {
        let mut e = vec![Q::zero(); d];
        e[i] = Q::one();
        cons.push(Aff { c: e.clone(), k: -hi.clone() });
        e[i] = -Q::one();
        cons.push(Aff { c: e, k: lo.clone() });
    }
    let inputs: Vec<Aff> = (0..d)
        .map(|i| {
            let mut c = vec![Q::zero(); d];
            c[i] = Q::one();
            Aff { c, k: Q::zero() }
        })
        .collect();
    let verts = vertices(&cons, d);
    let mut hull: Vec<Option<(Q, Q)>> = vec![None; net.output_dim()];
    explore(net, 1, 0, &inputs, Vec::new(), cons, verts, &mut hull);
    hull.into_iter()
        .map(|h| {
            let (lo, hi) = h.expect("some pattern is feasible");
            Interval::closed(lo, hi).unwrap()
        })
        .collect()
}

fn affine_layer(net: &Network, layer: usize, index: usize, prev: &[Aff], d: usize) -> Aff {
    let row = &net.weights(layer)[index];
    let mut c = vec![Q::zero(); d];
    let mut k = net.biases(layer)[index].clone();
    for (w, a) in row.iter().zip(prev) {
        for (ci, ai) in c.iter_mut().zip(&a.c) {
            *ci += w * ai;
        }
        k += w * &a.k;
    }
    Aff { c, k }
}

#[allow(clippy::too_many_arguments)]
fn explore(
    net: &Network,
    layer: usize,
    index: usize,
    prev: &[Aff],
    current: Vec<Aff>,
    cons: Vec<Aff>,
    verts: Vec<Vec<Q>>,
    hull: &mut [Option<(Q, Q)>],
) {
    let d = net.input_dim();
    if verts.is_empty() {
        return;
    }
    if layer == net.hidden_layers() + 1 {
        for (j, h) in hull.iter_mut().enumerate() {
            let y = affine_layer(net, layer, j, prev, d);
            let (lo, hi) = extremes(&y, &verts);
            *h = Some(match h.take() {
                None => (lo, hi),
                Some((a, b)) => (a.min(lo), b.max(hi)),
            });
        }
        return;
    }
    if index == net.layer_sizes()[layer] {
        explore(net, layer + 1, 0, &current, Vec::new(), cons, verts, hull);
        return;
    }
    let z = affine_layer(net, layer, index, prev, d);
    let (lo, hi) = extremes(&z, &verts);
    let zero = Aff {
        c: vec![Q::zero(); d],
        k: Q::zero(),
    };
    if !lo.is_negative() {
        let mut next = current;
        next.push(z);
        explore(net, layer, index + 1, prev, next, cons, verts, hull);
    } else if !hi.is_positive() {
        let mut next = current;
        next.push(zero);
        explore(net, layer, index + 1, prev, next, cons, verts, hull);
    } else {
        // active: -z <= 0
        let mut on = cons.clone();
        on.push(Aff {
            c: z.c.iter().map(|v| -v).collect(),
            k: -z.k.clone(),
        });
        let v_on = vertices(&on, d);
        let mut next = current.clone();
        next.push(z.clone());
        explore(net, layer, index + 1, prev, next, on, v_on, hull);
        // inactive: z <= 0
        let mut off = cons;
        off.push(z);
        let v_off = vertices(&off, d);
        let mut next = current;
        next.push(zero);
        explore(net, layer, index + 1, prev, next, off, v_off, hull);
    }
}

// ---------------------------------------------------------------------------
// Naive dense Fourier-Motzkin feasibility, no redundancy handling.

/// `a . y REL b` with `REL` in `<=`, `<`.
#[derive(Clone, Debug)]
struct Ineq {
    a: Vec<Q>,
    b: Q,
    strict: bool,
}

/// Feasibility of a conjunction of atoms over the variables they mention,
/// with `fixed` substituted first.
pub fn naive_feasible(atoms: &[Atom], fixed: &BTreeMap<VarId, Q>) -> bool {
    let mut vars: Vec<VarId> = Vec::new();
    for a in atoms {
        for v in a.vars() {
            if !fixed.contains_key(&v) && !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut rows = Vec::new();
    for atom in atoms {
        let mut a = vec![Q::zero(); vars.len()];
        let mut k = atom.expr().constant_term().clone();
        for (v, c) in atom.expr().terms() {
            match fixed.get(v) {
                Some(x) => k += c * x,
                None => a[vars.iter().position(|u| u == v).unwrap()] = c.clone(),
            }
        }
        // a . y + k REL 0  ->  a . y REL -k
        let row = Ineq {
            a,
            b: -k,
            strict: atom.relation() == Relation::Lt,
        };
        if atom.relation() == Relation::Eq {
            rows.push(Ineq {
                a: row.a.iter().map(|v| -v).collect(),
                b: -row.b.clone(),
                strict: false,
            });
        }
        rows.push(row);
    }
    for v in 0..vars.len() {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.a[v].is_positive() {
                pos.push(r);
            } else if r.a[v].is_negative() {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        for p in &pos {
            for n in &neg {
                let sp = Q::one() / &p.a[v];
                let sn = Q::one() / -&n.a[v];
                rest.push(Ineq {
                    a: p.a.iter().zip(&n.a).map(|(x, y)| x * &sp + y * &sn).collect(),
                    b: &p.b * &sp + &n.b * &sn,
                    strict: p.strict || n.strict,
                });
            }
        }
        rows = rest;
    }
    rows.iter().all(|r| {
        if r.strict {
            r.b.is_positive()
        } else {
            !r.b.is_negative()
        }
    })
}

/// `exists (vars not in fixed). formula` at the fixed point.
pub fn naive_exists(formula: &DnfFormula, fixed: &BTreeMap<VarId, Q>) -> bool {
    formula.clauses().iter().any(|c| naive_feasible(c.atoms(), fixed))
}

/// Negation of a DNF as a list of clauses (product of negated atoms).
pub fn naive_negate(formula: &DnfFormula) -> Vec<Vec<Atom>> {
    let mut acc: Vec<Vec<Atom>> = vec![Vec::new()];
    for clause in formula.clauses() {
        let mut next = Vec::new();
        for partial in &acc {
            for atom in clause.atoms() {
                for neg in negate_atom(atom) {
                    let mut p = partial.clone();
                    p.push(neg);
                    next.push(p);
                }
            }
        }
        acc = next;
    }
    acc
}

fn negate_atom(a: &Atom) -> Vec<Atom> {
    let e = a.expr();
    let zero = AffineExpr::zero();
    match a.relation() {
        Relation::Le => vec![Atom::gt(e, &zero)],
        Relation::Lt => vec![Atom::ge(e, &zero)],
        Relation::Eq => vec![Atom::lt(e, &zero), Atom::gt(e, &zero)],
    }
}

/// `forall (vars not in fixed). antecedent => consequent` at the fixed point.
pub fn naive_forall_implies(antecedent: &DnfFormula, consequent: &DnfFormula, fixed: &BTreeMap<VarId, Q>) -> bool {
    let violations = naive_negate(consequent);
    for a in antecedent.clauses() {
        for v in &violations {
            let mut atoms = a.atoms().to_vec();
            atoms.extend(v.iter().cloned());
            if naive_feasible(&atoms, fixed) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Random formulas

pub fn random_atom<R: Rng>(rng: &mut R, vars: &[VarId]) -> Atom {
    let mut e = AffineExpr::constant(q(rng.gen_range(-6..=6), rng.gen_range(1..=2)));
    for v in vars {
        if rng.gen_bool(0.6) {
            e.add_term(*v, q(rng.gen_range(-3..=3), 1));
        }
    }
    let zero = AffineExpr::zero();
    match rng.gen_range(0..10) {
        0 => Atom::eq(&e, &zero),
        1..=3 => Atom::lt(&e, &zero),
        _ => Atom::le(&e, &zero),
    }
}

pub fn random_dnf<R: Rng>(rng: &mut R, vars: &[VarId], clauses: usize, atoms: usize) -> DnfFormula {
    DnfFormula::new((0..rng.gen_range(1..=clauses)).map(|_| Clause::new((0..rng.gen_range(1..=atoms)).map(|_| random_atom(rng, vars)))))
}

/// Half-step grid points in `[-r, r]`.
pub fn grid(r: i64) -> Vec<Q> {
    (-2 * r..=2 * r).map(|k| q(k, 2)).collect()
}
