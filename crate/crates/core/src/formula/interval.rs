use std::fmt;

use num_traits::{Signed, Zero};

use super::FormulaError;
use crate::rational::{to_decimal, to_exact_string, Rational};

/// A (possibly unbounded, possibly half-open) real interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl Interval {
    pub fn new(
        lower: Option<Rational>,
        upper: Option<Rational>,
        lower_open: bool,
        upper_open: bool,
    ) -> Result<Interval, FormulaError> {
        let lower_open = lower_open && lower.is_some();
        let upper_open = upper_open && upper.is_some();
        if let (Some(l), Some(u)) = (&lower, &upper) {
            if l > u || (l == u && (lower_open || upper_open)) {
                return Err(FormulaError::EmptyInterval);
            }
        }
        Ok(Interval {
            lower,
            upper,
            lower_open,
            upper_open,
        })
    }

    pub fn closed(lower: Rational, upper: Rational) -> Result<Interval, FormulaError> {
        Interval::new(Some(lower), Some(upper), false, false)
    }

    pub fn point(v: Rational) -> Interval {
        Interval {
            lower: Some(v.clone()),
            upper: Some(v),
            lower_open: false,
            upper_open: false,
        }
    }

    pub fn unbounded() -> Interval {
        Interval {
            lower: None,
            upper: None,
            lower_open: false,
            upper_open: false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    pub fn is_closed(&self) -> bool {
        !self.lower_open && !self.upper_open
    }

    pub fn lo(&self) -> Option<&Rational> {
        self.lower.as_ref()
    }

    pub fn hi(&self) -> Option<&Rational> {
        self.upper.as_ref()
    }

    /// Finite endpoints, or `None` when either side is unbounded.
    pub fn endpoints(&self) -> Option<(Rational, Rational)> {
        Some((self.lower.clone()?, self.upper.clone()?))
    }

    pub fn width(&self) -> Option<Rational> {
        Some(self.upper.as_ref()? - self.lower.as_ref()?)
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let above = match &self.lower {
            None => true,
            Some(l) if self.lower_open => v > l,
            Some(l) => v >= l,
        };
        let below = match &self.upper {
            None => true,
            Some(u) if self.upper_open => v < u,
            Some(u) => v <= u,
        };
        above && below
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let (lower, lower_open) = match (&self.lower, &other.lower) {
            (None, _) | (_, None) => (None, false),
            (Some(a), Some(b)) if a < b => (Some(a.clone()), self.lower_open),
            (Some(a), Some(b)) if b < a => (Some(b.clone()), other.lower_open),
            (Some(a), Some(_)) => (Some(a.clone()), self.lower_open && other.lower_open),
        };
        let (upper, upper_open) = match (&self.upper, &other.upper) {
            (None, _) | (_, None) => (None, false),
            (Some(a), Some(b)) if a > b => (Some(a.clone()), self.upper_open),
            (Some(a), Some(b)) if b > a => (Some(b.clone()), other.upper_open),
            (Some(a), Some(_)) => (Some(a.clone()), self.upper_open && other.upper_open),
        };
        Interval {
            lower,
            upper,
            lower_open,
            upper_open,
        }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lower_ok = match (&other.lower, &self.lower) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s > o || (s == o && (!other.lower_open || self.lower_open)),
        };
        let upper_ok = match (&other.upper, &self.upper) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s < o || (s == o && (!other.upper_open || self.upper_open)),
        };
        lower_ok && upper_ok
    }

    /// Every point of `self` is strictly below every point of `other`.
    pub fn strictly_below(&self, other: &Interval) -> bool {
        match (&self.upper, &other.lower) {
            (Some(u), Some(l)) => u < l || (u == l && (self.upper_open || other.lower_open)),
            _ => false,
        }
    }

    /// ReLU image `[max(0, lo), max(0, hi)]`.
    pub fn relu(&self) -> Interval {
        let clamp = |v: &Option<Rational>, open: bool| match v {
            None => (None, false),
            Some(x) if x.is_positive() => (Some(x.clone()), open),
            Some(_) => (Some(Rational::zero()), false),
        };
        let (lower, lower_open) = clamp(&self.lower, self.lower_open);
        let (upper, upper_open) = clamp(&self.upper, self.upper_open);
        Interval {
            lower,
            upper,
            lower_open,
            upper_open,
        }
    }

    pub fn render_decimal(&self, digits: usize) -> String {
        let lo = self
            .lower
            .as_ref()
            .map_or("-inf".to_string(), |v| to_decimal(v, digits));
        let hi = self
            .upper
            .as_ref()
            .map_or("+inf".to_string(), |v| to_decimal(v, digits));
        format!(
            "{}{lo}, {hi}{}",
            if self.lower_open { "(" } else { "[" },
            if self.upper_open { ")" } else { "]" }
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lower.as_ref().map_or("-inf".to_string(), to_exact_string);
        let hi = self.upper.as_ref().map_or("+inf".to_string(), to_exact_string);
        write!(
            f,
            "{}{lo}, {hi}{}",
            if self.lower_open { "(" } else { "[" },
            if self.upper_open { ")" } else { "]" }
        )
    }
}

/// An axis-aligned box of closed finite intervals, one per input dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputBox {
    bounds: Vec<(Rational, Rational)>,
}

impl InputBox {
    pub fn new(bounds: Vec<(Rational, Rational)>) -> Result<InputBox, FormulaError> {
        if bounds.iter().any(|(l, u)| l > u) {
            return Err(FormulaError::EmptyInterval);
        }
        Ok(InputBox { bounds })
    }

    /// The L-infinity ball `[c - r, c + r]` per dimension.
    pub fn around(center: &[Rational], radius: &Rational) -> Result<InputBox, FormulaError> {
        InputBox::new(
            center
                .iter()
                .map(|c| (c - radius, c + radius))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(Rational, Rational)] {
        &self.bounds
    }

    pub fn lower(&self, i: usize) -> &Rational {
        &self.bounds[i].0
    }

    pub fn upper(&self, i: usize) -> &Rational {
        &self.bounds[i].1
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::point(self.bounds[i].0.clone()).hull(&Interval::point(self.bounds[i].1.clone()))
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.bounds)
                .all(|(p, (l, u))| p >= l && p <= u)
    }

    pub fn intersect(&self, other: &InputBox) -> Result<InputBox, FormulaError> {
        if self.dim() != other.dim() {
            return Err(FormulaError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        InputBox::new(
            self.bounds
                .iter()
                .zip(&other.bounds)
                .map(|((l1, u1), (l2, u2))| (l1.max(l2).clone(), u1.min(u2).clone()))
                .collect(),
        )
    }

    pub fn volume(&self) -> Rational {
        self.bounds
            .iter()
            .fold(Rational::from_integer(1.into()), |acc, (l, u)| acc * (u - l))
    }

    pub fn is_subset_of(&self, other: &InputBox) -> bool {
        self.dim() == other.dim()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|((l1, u1), (l2, u2))| l1 >= l2 && u1 <= u2)
    }
}

impl fmt::Display for InputBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, u)) in self.bounds.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{}, {}]", to_exact_string(l), to_exact_string(u))?;
        }
        Ok(())
    }
}
