use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::FormulaError;
use crate::rational::{to_exact_string, Rational};

/// A variable together with the role it plays in a network encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum VarId {
    /// Network input `x_i` (normalized space).
    Input(u32),
    /// Weighted-sum node of hidden neuron `(layer, index)`; layers are 1-based.
    WeightedSum { layer: u32, index: u32 },
    /// Activation node of hidden neuron `(layer, index)`.
    Activation { layer: u32, index: u32 },
    /// Network output `y_i`.
    Output(u32),
    /// The free perturbation radius in backward derivations.
    Perturbation,
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Input(i) => write!(f, "x{i}"),
            VarId::WeightedSum { layer, index } => write!(f, "z{layer}_{index}"),
            VarId::Activation { layer, index } => write!(f, "a{layer}_{index}"),
            VarId::Output(i) => write!(f, "y{i}"),
            VarId::Perturbation => write!(f, "delta"),
        }
    }
}

/// `sum(coeff * var) + constant`, kept sparse: zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineExpr {
    coeffs: BTreeMap<VarId, Rational>,
    constant: Rational,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        AffineExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, Rational::one())
    }

    pub fn term(v: VarId, c: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(v, c);
        e
    }

    pub fn from_terms<I>(terms: I, constant: Rational) -> Self
    where
        I: IntoIterator<Item = (VarId, Rational)>,
    {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: VarId, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.entry(v) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &AffineExpr, factor: &Rational) {
        if factor.is_zero() {
            return;
        }
        for (v, c) in &other.coeffs {
            self.add_term(*v, c * factor);
        }
        self.constant += &other.constant * factor;
    }

    pub fn scale(&self, factor: &Rational) -> AffineExpr {
        if factor.is_zero() {
            return Self::zero();
        }
        AffineExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * factor)).collect(),
            constant: &self.constant * factor,
        }
    }

    pub fn coeff(&self, v: VarId) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeff_ref(&self, v: VarId) -> Option<&Rational> {
        self.coeffs.get(&v)
    }

    pub fn constant_term(&self) -> &Rational {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&VarId, &Rational)> {
        self.coeffs.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The smallest variable with a nonzero coefficient.
    pub fn leading(&self) -> Option<(VarId, &Rational)> {
        self.coeffs.iter().next().map(|(v, c)| (*v, c))
    }

    /// Replaces `var` by `replacement`, distributing its coefficient.
    pub fn substitute(&self, var: VarId, replacement: &AffineExpr) -> Result<AffineExpr, FormulaError> {
        if replacement.contains(var) {
            return Err(FormulaError::SelfReference(var));
        }
        Ok(self.substitute_unchecked(var, replacement))
    }

    pub(crate) fn substitute_unchecked(&self, var: VarId, replacement: &AffineExpr) -> AffineExpr {
        let Some(c) = self.coeffs.get(&var) else {
            return self.clone();
        };
        let c = c.clone();
        let mut out = self.clone();
        out.coeffs.remove(&var);
        out.add_scaled(replacement, &c);
        out
    }

    /// Exact evaluation; variables missing from `lookup` are an error.
    pub fn eval_with<F>(&self, mut lookup: F) -> Result<Rational, FormulaError>
    where
        F: FnMut(VarId) -> Option<Rational>,
    {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let value = lookup(*v).ok_or(FormulaError::Unbound(*v))?;
            acc += c * value;
        }
        Ok(acc)
    }

    pub fn eval(&self, point: &BTreeMap<VarId, Rational>) -> Result<Rational, FormulaError> {
        self.eval_with(|v| point.get(&v).cloned())
    }

    /// Interval image over independent per-variable bounds `[lo, hi]`.
    pub fn bounds_over<F>(&self, mut bounds: F) -> Option<(Rational, Rational)>
    where
        F: FnMut(VarId) -> Option<(Rational, Rational)>,
    {
        let mut lo = self.constant.clone();
        let mut hi = self.constant.clone();
        for (v, c) in &self.coeffs {
            let (l, h) = bounds(*v)?;
            if c.is_positive() {
                lo += c * l;
                hi += c * h;
            } else {
                lo += c * h;
                hi += c * l;
            }
        }
        Some((lo, hi))
    }
}

impl Add for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Sub for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let negative = c.is_negative();
            let mag = c.abs();
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            if mag.is_one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{}*{v}", to_exact_string(&mag))?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", to_exact_string(&self.constant))
        } else if !self.constant.is_zero() {
            let sign = if self.constant.is_negative() { "-" } else { "+" };
            write!(f, " {sign} {}", to_exact_string(&self.constant.abs()))
        } else {
            Ok(())
        }
    }
}
