//! Verification queries on top of range propagation: δ-local robustness,
//! the δ→ε and ε→δ mappings, and input/output property checks.
//!
//! Neighborhoods are L∞ boxes `[x0 − δ, x0 + δ]` in normalized input space,
//! clipped to the network's input domain.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{AffineExpr, Atom, Clause, DnfFormula, FormulaError, InputBox, Interval, VarId};
use crate::network::{select_label, LabelChoice, Network, NetworkError, SelectionRule};
use crate::partition::{propagate_partitioned, PartitionError, PartitionPlan, PartitionedRange};
use crate::propagation::{weighted_sum_expr, BehavioralStructure, PropagationConfig, PropagationError};
use crate::qe::{clause_witness, eliminate_universal_implication, satisfiable_with, variable_range, QeError};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum RobustnessError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("elimination failed: {0}")]
    Qe(#[from] QeError),
    #[error("delta must be positive")]
    NonPositiveDelta,
    #[error("output {index} out of range for a network with {outputs} outputs")]
    UnknownOutput { index: usize, outputs: usize },
    #[error("the reference point is outside the input domain")]
    OutsideDomain,
    #[error("target epsilon {target} is not below epsilon(delta0) = {reached}")]
    EpsilonNotBelow { target: String, reached: String },
    #[error("backward derivation needs the structure of a single unpartitioned box")]
    NeedsSingleStructure,
    #[error("property predicate mentions {0}, only outputs are allowed")]
    NonOutputVariable(VarId),
}

#[derive(Clone, Debug, Default)]
pub struct RobustnessOptions {
    pub rule: SelectionRule,
    /// Also try to separate the reference label from each competitor by
    /// conjoining the encoding with `y_j <= y_l` (argmin) and checking
    /// satisfiability.
    pub label_constraints: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "verdict", content = "label")]
pub enum Verdict {
    Robust(usize),
    Unknown,
}

#[derive(Clone, Debug)]
pub struct RobustnessVerdict {
    pub verdict: Verdict,
    /// Label of the reference point; a tie never yields `Robust`.
    pub reference: LabelChoice,
    pub outputs: Vec<Interval>,
    /// Competitors not separated from the reference label.
    pub overlapping: Vec<usize>,
    pub precise: bool,
    pub subspaces: usize,
    pub elapsed: Duration,
}

fn check_output(network: &Network, output: usize) -> Result<(), RobustnessError> {
    if output >= network.output_dim() {
        return Err(RobustnessError::UnknownOutput {
            index: output,
            outputs: network.output_dim(),
        });
    }
    Ok(())
}

/// `[x0 − δ, x0 + δ]` intersected with the input domain.
pub fn delta_box(network: &Network, x0: &[Rational], delta: &Rational) -> Result<InputBox, RobustnessError> {
    if !delta.is_positive() {
        return Err(RobustnessError::NonPositiveDelta);
    }
    if x0.len() != network.input_dim() {
        return Err(NetworkError::Dimension {
            expected: network.input_dim(),
            found: x0.len(),
        }
        .into());
    }
    let domain = network.normalized_domain();
    if !domain.contains(x0) {
        return Err(RobustnessError::OutsideDomain);
    }
    Ok(InputBox::around(x0, delta)?.intersect(&domain)?)
}

/// `a` dominates `b` under the rule: strictly below for argmin, strictly
/// above for argmax.
fn dominates(a: &Interval, b: &Interval, rule: SelectionRule) -> bool {
    match rule {
        SelectionRule::Argmin => a.strictly_below(b),
        SelectionRule::Argmax => b.strictly_below(a),
    }
}

fn output_expr(network: &Network, s: &BehavioralStructure, j: usize) -> Result<AffineExpr, PropagationError> {
    weighted_sum_expr(network, s, network.hidden_layers() + 1, j)
}

/// Whether some point of `s` lets `competitor` match or beat `label`.
/// `None` when the encoding could not be completed within budget.
fn competitor_reachable(
    network: &Network,
    s: &BehavioralStructure,
    label: usize,
    competitor: usize,
    rule: SelectionRule,
    config: &PropagationConfig,
) -> Result<Option<bool>, RobustnessError> {
    let limits = config.limits(config.deadline());
    let mut s = s.clone();
    if s.refresh(&limits).is_err() {
        return Ok(None);
    }
    let yl = output_expr(network, &s, label)?;
    let yj = output_expr(network, &s, competitor)?;
    let challenge = match rule {
        SelectionRule::Argmin => Atom::le(&yj, &yl),
        SelectionRule::Argmax => Atom::ge(&yj, &yl),
    };
    for clause in s.encoding().clauses() {
        match satisfiable_with(&clause.with(challenge.clone()), &limits) {
            Ok(true) => return Ok(Some(true)),
            Ok(false) => {}
            Err(e) if e.is_resource_limit() => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(false))
}

/// Decides δ-local robustness at `x0` by comparing output ranges over the
/// δ-box under the selection rule.
pub fn check_delta_robustness(
    network: &Network,
    x0: &[Rational],
    delta: &Rational,
    plan: &PartitionPlan,
    config: &PropagationConfig,
    options: &RobustnessOptions,
) -> Result<RobustnessVerdict, RobustnessError> {
    let started = Instant::now();
    let b = delta_box(network, x0, delta)?;
    let reference = select_label(&network.evaluate_exact(x0)?, options.rule);
    let ranges = propagate_partitioned(network, &b, plan, config)?;
    let mut overlapping = Vec::new();
    if let LabelChoice::Unique(l) = reference {
        for j in (0..network.output_dim()).filter(|j| *j != l) {
            let separated = ranges
                .subspaces
                .iter()
                .all(|s| dominates(&s.result.outputs[l], &s.result.outputs[j], options.rule));
            if !separated {
                overlapping.push(j);
            }
        }
        if options.label_constraints && !overlapping.is_empty() {
            let pool = config.pool()?;
            let still: Vec<Result<bool, RobustnessError>> = pool.install(|| {
                overlapping
                    .par_iter()
                    .map(|&j| {
                        for s in &ranges.subspaces {
                            match competitor_reachable(network, &s.structure, l, j, options.rule, config)? {
                                Some(false) => {}
                                _ => return Ok(true),
                            }
                        }
                        Ok(false)
                    })
                    .collect()
            });
            let mut kept = Vec::new();
            for (j, r) in overlapping.iter().zip(still) {
                if r? {
                    kept.push(*j);
                }
            }
            overlapping = kept;
        }
    }
    let verdict = match reference {
        LabelChoice::Unique(l) if overlapping.is_empty() => Verdict::Robust(l),
        _ => Verdict::Unknown,
    };
    if let LabelChoice::Tie(ref labels) = reference {
        overlapping = labels.clone();
    }
    Ok(RobustnessVerdict {
        verdict,
        reference,
        outputs: ranges.outputs.clone(),
        overlapping,
        precise: ranges.precise,
        subspaces: ranges.subspaces.len(),
        elapsed: started.elapsed(),
    })
}

#[derive(Clone, Debug)]
pub struct DeltaToEpsilon {
    pub epsilon: Rational,
    pub output: usize,
    pub range: Interval,
    /// `f(x0)` for the requested output.
    pub reference_value: Rational,
    pub precise: bool,
    pub x0: Vec<Rational>,
    pub delta: Rational,
    pub partitioned: PartitionedRange,
}

impl DeltaToEpsilon {
    /// The behavioral structure over the whole δ-box, when it was not split.
    pub fn structure(&self) -> Option<&BehavioralStructure> {
        match self.partitioned.subspaces.as_slice() {
            [only] => Some(&only.structure),
            _ => None,
        }
    }
}

/// Largest deviation of output `output` from `f(x0)` over the δ-box.
pub fn delta_to_epsilon(
    network: &Network,
    x0: &[Rational],
    delta: &Rational,
    output: usize,
    plan: &PartitionPlan,
    config: &PropagationConfig,
) -> Result<DeltaToEpsilon, RobustnessError> {
    check_output(network, output)?;
    let b = delta_box(network, x0, delta)?;
    let y0 = network.evaluate_exact(x0)?[output].clone();
    let partitioned = propagate_partitioned(network, &b, plan, config)?;
    let range = partitioned.outputs[output].clone();
    let (lo, hi) = range.endpoints().expect("output ranges over a box are bounded");
    let epsilon = (&hi - &y0).max(&y0 - &lo);
    Ok(DeltaToEpsilon {
        epsilon,
        output,
        range,
        reference_value: y0,
        precise: partitioned.precise,
        x0: x0.to_vec(),
        delta: delta.clone(),
        partitioned,
    })
}

#[derive(Clone, Debug)]
pub struct EpsilonToDelta {
    /// Supremum of the admissible radii; `None` if the residual predicate
    /// is unbounded above.
    pub delta_star: Option<Rational>,
    /// The derivation is valid: the δ0 structure was exact, or `δ* <= δ0`.
    pub sound: bool,
    pub epsilon_at_delta0: Rational,
    /// The residual predicate over the perturbation variable.
    pub residual: String,
    pub elapsed: Duration,
}

/// The largest δ such that every input of the δ-box keeps output `output`
/// within `epsilon_star` of `f(x0)`, derived in one elimination from the
/// structure computed at `delta0`.
pub fn epsilon_to_delta(
    network: &Network,
    x0: &[Rational],
    delta0: &Rational,
    epsilon_star: &Rational,
    output: usize,
    config: &PropagationConfig,
) -> Result<EpsilonToDelta, RobustnessError> {
    let base = delta_to_epsilon(
        network,
        x0,
        delta0,
        output,
        &PartitionPlan::identity(network.input_dim()),
        config,
    )?;
    epsilon_to_delta_from(network, &base, epsilon_star, config)
}

/// [`epsilon_to_delta`] reusing an earlier [`delta_to_epsilon`] result.
pub fn epsilon_to_delta_from(
    network: &Network,
    base: &DeltaToEpsilon,
    epsilon_star: &Rational,
    config: &PropagationConfig,
) -> Result<EpsilonToDelta, RobustnessError> {
    let started = Instant::now();
    if epsilon_star.is_negative() || *epsilon_star >= base.epsilon {
        return Err(RobustnessError::EpsilonNotBelow {
            target: epsilon_star.to_string(),
            reached: base.epsilon.to_string(),
        });
    }
    let structure = base.structure().ok_or(RobustnessError::NeedsSingleStructure)?;
    let delta = AffineExpr::var(VarId::Perturbation);
    let y = AffineExpr::var(VarId::Output(base.output as u32));
    let y0 = AffineExpr::constant(base.reference_value.clone());

    // Domain bounds, the δ-box around x0, and the output definition. The
    // δ0 box itself is left out so that a radius beyond δ0 stays visible.
    let mut atoms = vec![
        Atom::ge(&delta, &AffineExpr::zero()),
        Atom::eq(&y, &output_expr(network, structure, base.output)?),
    ];
    let domain = network.normalized_domain();
    for (i, ((lo, hi), c)) in domain.bounds().iter().zip(&base.x0).enumerate() {
        let x = AffineExpr::var(VarId::Input(i as u32));
        let c = AffineExpr::constant(c.clone());
        atoms.push(Atom::ge(&x, &AffineExpr::constant(lo.clone())));
        atoms.push(Atom::le(&x, &AffineExpr::constant(hi.clone())));
        atoms.push(Atom::le(&(&x - &c), &delta));
        atoms.push(Atom::le(&(&c - &x), &delta));
    }
    let mut antecedent = DnfFormula::from_atoms(atoms);
    for (_, fragment) in structure.retained_constraints() {
        antecedent = antecedent.and(&fragment);
    }
    let eps = AffineExpr::constant(epsilon_star.clone());
    let consequent = DnfFormula::from_atoms([Atom::le(&(&y - &y0), &eps), Atom::le(&(&y0 - &y), &eps)]);
    let quantified: Vec<VarId> = antecedent
        .vars()
        .into_iter()
        .filter(|v| *v != VarId::Perturbation)
        .collect();
    let budget = config.per_neuron_budget.clone().with_stop_at(config.deadline());
    let residual = eliminate_universal_implication(&antecedent, &consequent, &quantified, &budget)?.value;

    let nonneg = Atom::ge(&delta, &AffineExpr::zero());
    let mut pieces: Vec<Interval> = Vec::new();
    for clause in residual.clauses() {
        let c = DnfFormula::from_clause(clause.with(nonneg.clone()));
        match variable_range(&c, VarId::Perturbation, &budget) {
            Ok(r) => pieces.push(r.value),
            Err(QeError::EmptyRange) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let delta_star = supremum_from_zero(pieces);
    let sound = base.precise
        || delta_star
            .as_ref()
            .is_some_and(|d| d <= &base.delta);
    Ok(EpsilonToDelta {
        delta_star,
        sound,
        epsilon_at_delta0: base.epsilon.clone(),
        residual: residual.to_string(),
        elapsed: started.elapsed(),
    })
}

/// Right end of the connected stretch of the union of `pieces` that starts
/// at 0; `None` if unbounded, `Some(0)` if 0 is not covered.
fn supremum_from_zero(mut pieces: Vec<Interval>) -> Option<Rational> {
    pieces.sort_by(|a, b| a.lo().cmp(&b.lo()));
    let mut reach = Rational::zero();
    let mut covered = false;
    for p in pieces {
        let starts_in_reach = match p.lo() {
            None => true,
            Some(l) => l < &reach || (l == &reach && (covered || !p.is_closed() || p.contains(&reach))),
        };
        if !starts_in_reach {
            break;
        }
        covered = true;
        match p.hi() {
            None => return None,
            Some(h) if h > &reach => reach = h.clone(),
            Some(_) => {}
        }
    }
    Some(reach)
}

/// Whether outputs are checked in the network's own units or after
/// undoing the output normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputSpace {
    #[default]
    Network,
    Raw,
}

#[derive(Clone, Debug)]
pub struct PropertySpec {
    pub input_box: InputBox,
    /// Predicate over `Output` variables.
    pub predicate: DnfFormula,
    pub rule: SelectionRule,
    pub output_space: OutputSpace,
}

impl PropertySpec {
    pub fn new(input_box: InputBox, predicate: DnfFormula) -> Result<PropertySpec, RobustnessError> {
        if let Some(v) = predicate.vars().into_iter().find(|v| !matches!(v, VarId::Output(_))) {
            return Err(RobustnessError::NonOutputVariable(v));
        }
        Ok(PropertySpec {
            input_box,
            predicate,
            rule: SelectionRule::default(),
            output_space: OutputSpace::Network,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyVerdict {
    Holds,
    Unknown,
}

/// How far an atom's expression reaches over an output box: its supremum,
/// positive when the atom can be violated.
#[derive(Clone, Debug)]
pub struct AtomSlack {
    pub atom: String,
    pub supremum: Rational,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub subspace: usize,
    pub outputs: Vec<Interval>,
    /// Output values inside the computed box that violate the predicate.
    pub witness: BTreeMap<String, Rational>,
    pub slack: Vec<AtomSlack>,
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub verdict: PropertyVerdict,
    /// Hull per output, in the units the predicate is checked in.
    pub outputs: Vec<Interval>,
    pub precise: bool,
    pub subspaces: usize,
    pub violations: Vec<Violation>,
    pub elapsed: Duration,
    pub partitioned: Option<PartitionedRange>,
}

fn to_space(network: &Network, iv: &Interval, space: OutputSpace) -> Interval {
    match space {
        OutputSpace::Network => iv.clone(),
        OutputSpace::Raw => {
            let (lo, hi) = iv.endpoints().expect("bounded");
            let (a, b) = (network.denormalize_output(&lo), network.denormalize_output(&hi));
            Interval::closed(a.clone().min(b.clone()), a.max(b)).expect("ordered")
        }
    }
}

fn output_box_clause(outputs: &[Interval]) -> Clause {
    Clause::new(outputs.iter().enumerate().flat_map(|(j, iv)| {
        let y = AffineExpr::var(VarId::Output(j as u32));
        let (lo, hi) = iv.endpoints().expect("bounded");
        [
            Atom::ge(&y, &AffineExpr::constant(lo)),
            Atom::le(&y, &AffineExpr::constant(hi)),
        ]
    }))
}

/// Checks that every output valuation allowed by each subspace's intervals
/// satisfies the predicate.
pub fn verify_io_property(
    network: &Network,
    spec: &PropertySpec,
    plan: &PartitionPlan,
    config: &PropagationConfig,
) -> Result<PropertyReport, RobustnessError> {
    let started = Instant::now();
    if let Some(v) = spec.predicate.vars().into_iter().find(|v| !matches!(v, VarId::Output(_))) {
        return Err(RobustnessError::NonOutputVariable(v));
    }
    for v in spec.predicate.vars() {
        if let VarId::Output(j) = v {
            check_output(network, j as usize)?;
        }
    }
    let partitioned = propagate_partitioned(network, &spec.input_box, plan, config)?;
    let budget = config.per_neuron_budget.clone().with_stop_at(config.deadline());
    let negated = spec.predicate.negate();
    let labels = network.output_labels();
    let mut violations = Vec::new();
    for s in &partitioned.subspaces {
        let outputs: Vec<Interval> = s
            .result
            .outputs
            .iter()
            .map(|iv| to_space(network, iv, spec.output_space))
            .collect();
        let region = output_box_clause(&outputs);
        for clause in negated.clauses() {
            let candidate = region.and(clause);
            let Some(point) = clause_witness(&candidate, &budget)? else {
                continue;
            };
            let bounds = |v: VarId| match v {
                VarId::Output(j) => outputs.get(j as usize).and_then(|iv| iv.endpoints()),
                _ => None,
            };
            let slack = spec
                .predicate
                .clauses()
                .iter()
                .flat_map(|c| c.atoms())
                .filter_map(|a| {
                    let (_, sup) = a.expr().bounds_over(bounds)?;
                    Some(AtomSlack {
                        atom: a.to_string(),
                        supremum: sup,
                    })
                })
                .collect();
            let witness = point
                .into_iter()
                .map(|(v, x)| match v {
                    VarId::Output(j) => (labels[j as usize].clone(), x),
                    other => (other.to_string(), x),
                })
                .collect();
            violations.push(Violation {
                subspace: s.index,
                outputs: outputs.clone(),
                witness,
                slack,
            });
            break;
        }
    }
    let outputs = partitioned
        .outputs
        .iter()
        .map(|iv| to_space(network, iv, spec.output_space))
        .collect();
    Ok(PropertyReport {
        verdict: if violations.is_empty() {
            PropertyVerdict::Holds
        } else {
            PropertyVerdict::Unknown
        },
        outputs,
        precise: partitioned.precise,
        subspaces: partitioned.subspaces.len(),
        violations,
        elapsed: started.elapsed(),
        partitioned: Some(partitioned),
    })
}

#[cfg(test)]
mod tests;
