use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::formula::{AffineExpr, Atom, Clause, DnfFormula, InputBox, Interval, VarId};
use crate::network::NeuronRef;
use crate::qe::{conjoin_feasible, Limits, QeError, QeStats};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronStatus {
    /// `z >= 0` over the whole box.
    Active,
    /// `z <= 0` over the whole box.
    Inactive,
    /// The z-range straddles zero.
    Branching,
}

/// How a neuron's activation is represented downstream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Handling {
    /// Replaced by its weighted sum (active) or by 0 (inactive).
    Collapsed,
    /// Kept as the disjunction of both ReLU pieces.
    Symbolic,
    /// Kept only as `lower <= a <= upper` over its a-range.
    Concretized,
}

/// Status, ranges and encoding data for one hidden neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuronState {
    pub neuron: NeuronRef,
    pub status: NeuronStatus,
    pub handling: Handling,
    pub z_range: Interval,
    pub a_range: Interval,
    /// Whether `z_range` is exact.
    pub precise: bool,
    /// The weighted sum over the variables that survive pruning.
    pub z_expr: AffineExpr,
}

/// Classifies a neuron by its z-range; a range touching zero at one end
/// counts as linear because both ReLU pieces agree at `z = 0`.
pub fn classify_neuron(z_range: &Interval) -> (NeuronStatus, Interval) {
    let zero = Rational::zero();
    let status = if z_range.lower.as_ref().is_some_and(|l| *l >= zero) {
        NeuronStatus::Active
    } else if z_range.upper.as_ref().is_some_and(|u| *u <= zero) {
        NeuronStatus::Inactive
    } else {
        NeuronStatus::Branching
    };
    (status, z_range.relu())
}

pub(crate) fn activation_var(n: NeuronRef) -> VarId {
    VarId::Activation {
        layer: n.layer as u32,
        index: n.index as u32,
    }
}

pub(crate) fn weighted_sum_var(n: NeuronRef) -> VarId {
    VarId::WeightedSum {
        layer: n.layer as u32,
        index: n.index as u32,
    }
}

/// The simplified network encoding over one input box.
///
/// Each hidden neuron is either collapsed into an affine expression, held
/// symbolically as a two-piece disjunction, or concretized to its a-range.
/// The expanded DNF of the retained constraints is cached and rebuilt only
/// when a previously encoded neuron changes.
#[derive(Clone, Debug)]
pub struct BehavioralStructure {
    input_box: InputBox,
    layers: Vec<Vec<NeuronState>>,
    activations: BTreeMap<NeuronRef, AffineExpr>,
    encoding: DnfFormula,
    encoded: BTreeSet<NeuronRef>,
    dirty: bool,
    precise: bool,
}

impl BehavioralStructure {
    pub fn new(input_box: InputBox) -> BehavioralStructure {
        let encoding = DnfFormula::from_clause(box_clause(&input_box));
        BehavioralStructure {
            input_box,
            layers: Vec::new(),
            activations: BTreeMap::new(),
            encoding,
            encoded: BTreeSet::new(),
            dirty: false,
            precise: true,
        }
    }

    pub fn input_box(&self) -> &InputBox {
        &self.input_box
    }

    pub fn layers(&self) -> &[Vec<NeuronState>] {
        &self.layers
    }

    pub fn neuron(&self, n: NeuronRef) -> Option<&NeuronState> {
        self.layers.get(n.layer.checked_sub(1)?)?.get(n.index)
    }

    fn neuron_mut(&mut self, n: NeuronRef) -> Option<&mut NeuronState> {
        self.layers.get_mut(n.layer.checked_sub(1)?)?.get_mut(n.index)
    }

    /// What downstream weighted sums see in place of the neuron's activation.
    pub fn activation_expr(&self, n: NeuronRef) -> Option<&AffineExpr> {
        self.activations.get(&n)
    }

    pub fn substitution_map(&self) -> &BTreeMap<NeuronRef, AffineExpr> {
        &self.activations
    }

    /// False once any neuron was concretized or fell back to interval bounds.
    pub fn is_precise(&self) -> bool {
        self.precise
    }

    pub(crate) fn mark_imprecise(&mut self) {
        self.precise = false;
    }

    /// Branching neurons still held symbolically.
    pub fn branching_count(&self) -> usize {
        self.states()
            .filter(|s| s.status == NeuronStatus::Branching && s.handling == Handling::Symbolic)
            .count()
    }

    pub fn states(&self) -> impl Iterator<Item = &NeuronState> {
        self.layers.iter().flatten()
    }

    /// Constraints retained for `n`, over its activation variable and
    /// upstream variables; `None` for collapsed neurons.
    pub fn fragment(&self, n: NeuronRef) -> Option<DnfFormula> {
        let s = self.neuron(n)?;
        let a = AffineExpr::var(activation_var(n));
        match s.handling {
            Handling::Collapsed => None,
            Handling::Symbolic => {
                let zero = AffineExpr::zero();
                Some(DnfFormula::new([
                    Clause::new([Atom::eq(&a, &s.z_expr), Atom::ge(&s.z_expr, &zero)]),
                    Clause::new([Atom::eq(&a, &zero), Atom::le(&s.z_expr, &zero)]),
                ]))
            }
            Handling::Concretized => {
                let (lo, hi) = s.a_range.endpoints()?;
                if lo == hi {
                    return None;
                }
                Some(DnfFormula::from_atoms([
                    Atom::ge(&a, &AffineExpr::constant(lo)),
                    Atom::le(&a, &AffineExpr::constant(hi)),
                ]))
            }
        }
    }

    /// The retained constraint set, one DNF fragment per non-collapsed neuron.
    pub fn retained_constraints(&self) -> Vec<(NeuronRef, DnfFormula)> {
        self.states()
            .filter_map(|s| self.fragment(s.neuron).map(|f| (s.neuron, f)))
            .collect()
    }

    /// The expanded encoding: box constraints conjoined with every retained
    /// fragment, infeasible clauses dropped. Stale until [`Self::refresh`].
    pub fn encoding(&self) -> &DnfFormula {
        &self.encoding
    }

    pub(crate) fn is_current(&self) -> bool {
        !self.dirty && self.states().all(|s| self.fragment(s.neuron).is_none() || self.encoded.contains(&s.neuron))
    }

    /// No disjunction retained: the encoding constrains each variable
    /// independently, so interval images are exact.
    pub(crate) fn is_box_like(&self) -> bool {
        self.states().all(|s| s.handling != Handling::Symbolic)
    }

    /// Appends a layer. Every neuron starts out held symbolically with its
    /// activation variable standing in downstream.
    pub fn push_layer(&mut self, states: Vec<NeuronState>) {
        for s in &states {
            self.activations.insert(s.neuron, AffineExpr::var(activation_var(s.neuron)));
        }
        self.layers.push(states);
    }

    /// Independent per-variable bounds: the box for inputs and a-ranges for
    /// activations.
    pub fn var_bounds(&self, v: VarId) -> Option<(Rational, Rational)> {
        match v {
            VarId::Input(i) => {
                let i = i as usize;
                (i < self.input_box.dim())
                    .then(|| (self.input_box.lower(i).clone(), self.input_box.upper(i).clone()))
            }
            VarId::Activation { layer, index } => self
                .neuron(NeuronRef {
                    layer: layer as usize,
                    index: index as usize,
                })?
                .a_range
                .endpoints(),
            _ => None,
        }
    }

    /// Interval-arithmetic image of `expr`; sound for any structure.
    pub fn interval_image(&self, expr: &AffineExpr) -> Interval {
        match expr.bounds_over(|v| self.var_bounds(v)) {
            Some((lo, hi)) => Interval::closed(lo, hi).expect("lo <= hi"),
            None => Interval::unbounded(),
        }
    }

    /// Replaces `n`'s activation by `replacement` in every later weighted sum.
    fn substitute_downstream(&mut self, n: NeuronRef, replacement: &AffineExpr) {
        let var = activation_var(n);
        for layer in self.layers.iter_mut().skip(n.layer) {
            for s in layer {
                if s.z_expr.contains(var) {
                    s.z_expr = s.z_expr.substitute_unchecked(var, replacement);
                }
            }
        }
        for (other, expr) in self.activations.iter_mut() {
            if other.layer > n.layer && expr.contains(var) {
                *expr = expr.substitute_unchecked(var, replacement);
            }
        }
        if self.encoded.iter().any(|e| e.layer >= n.layer) {
            self.dirty = true;
        }
    }

    pub(crate) fn collapse_in_place(&mut self, n: NeuronRef) -> Result<(), StructureError> {
        let s = self.neuron_mut(n).ok_or(StructureError::UnknownNeuron(n))?;
        let replacement = match s.status {
            NeuronStatus::Active => s.z_expr.clone(),
            NeuronStatus::Inactive => AffineExpr::zero(),
            NeuronStatus::Branching => return Err(StructureError::NotLinear(n)),
        };
        s.handling = Handling::Collapsed;
        self.activations.insert(n, replacement.clone());
        self.substitute_downstream(n, &replacement);
        if self.encoded.contains(&n) {
            self.dirty = true;
        }
        Ok(())
    }

    pub(crate) fn concretize_in_place(&mut self, n: NeuronRef) -> Result<(), StructureError> {
        let s = self.neuron_mut(n).ok_or(StructureError::UnknownNeuron(n))?;
        if s.status != NeuronStatus::Branching || s.handling != Handling::Symbolic {
            return Err(StructureError::NotBranching(n));
        }
        s.handling = Handling::Concretized;
        let point = s.a_range.endpoints().filter(|(l, h)| l == h).map(|(l, _)| l);
        self.precise = false;
        if let Some(c) = point {
            let replacement = AffineExpr::constant(c);
            self.activations.insert(n, replacement.clone());
            self.substitute_downstream(n, &replacement);
        }
        if self.encoded.contains(&n) {
            self.dirty = true;
        }
        Ok(())
    }

    /// Brings the cached encoding up to date. On failure, reports the neuron
    /// whose fragment could not be added.
    pub(crate) fn refresh(&mut self, limits: &Limits) -> Result<QeStats, (NeuronRef, QeError)> {
        let mut stats = QeStats::default();
        if self.dirty {
            self.encoding = DnfFormula::from_clause(box_clause(&self.input_box));
            self.encoded.clear();
            self.dirty = false;
        }
        let pending: Vec<NeuronRef> = self
            .states()
            .map(|s| s.neuron)
            .filter(|n| !self.encoded.contains(n))
            .collect();
        for n in pending {
            let Some(fragment) = self.fragment(n) else {
                continue;
            };
            let result = if fragment.clauses().len() == 1 {
                // a fresh variable with nonempty bounds keeps every clause feasible
                Ok((self.encoding.and(&fragment), QeStats::default()))
            } else {
                conjoin_feasible(&self.encoding, &fragment, limits)
            };
            match result {
                Ok((enc, s)) => {
                    stats.merge(&s);
                    self.encoding = enc;
                    self.encoded.insert(n);
                }
                Err(e) => {
                    // leave the cache consistent for a later rebuild
                    self.dirty = true;
                    return Err((n, e));
                }
            }
        }
        Ok(stats)
    }
}

pub(crate) fn box_clause(b: &InputBox) -> Clause {
    Clause::new((0..b.dim()).flat_map(|i| {
        let x = AffineExpr::var(VarId::Input(i as u32));
        [
            Atom::ge(&x, &AffineExpr::constant(b.lower(i).clone())),
            Atom::le(&x, &AffineExpr::constant(b.upper(i).clone())),
        ]
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("neuron {0} is not present in the structure")]
    UnknownNeuron(NeuronRef),
    #[error("neuron {0} is branching and cannot be collapsed")]
    NotLinear(NeuronRef),
    #[error("neuron {0} is not a symbolically held branching neuron")]
    NotBranching(NeuronRef),
}

pub(crate) fn a_width(s: &NeuronState) -> Option<Rational> {
    s.a_range.width().map(|w| w.abs())
}
