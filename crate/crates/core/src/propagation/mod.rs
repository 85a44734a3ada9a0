//! Layer-by-layer range propagation.
//!
//! The range of every neuron is computed by eliminating all other variables
//! from the encoding of its entire upstream sub-graph. Neurons whose range
//! does not straddle zero are collapsed into affine expressions before the
//! next layer is processed, so only branching neurons contribute
//! disjunctions. In over-approximate mode, branching neurons beyond the
//! budget are replaced by their a-range bounds.

mod heuristic;
mod structure;

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use heuristic::{
    ConcretizationHeuristic, EarliestFirst, HeuristicRegistry, LargestWidth, LatestFirst, SmallestWidth,
};
pub use structure::{classify_neuron, BehavioralStructure, Handling, NeuronState, NeuronStatus, StructureError};

use crate::formula::{AffineExpr, Atom, Clause, InputBox, Interval, VarId};
use crate::network::{Network, NeuronRef};
use crate::qe::{variable_range_with, EliminationBudget, Limits, QeError, QeStats};
use structure::{activation_var, weighted_sum_var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Never concretizes; resource limits are errors.
    #[default]
    Precise,
    /// Concretizes to stay within the branching budget and falls back to
    /// interval arithmetic when a query exhausts its budget.
    #[serde(rename = "over")]
    OverApproximate,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "precise" => Ok(Mode::Precise),
            "over" | "over-approximate" | "over_approximate" => Ok(Mode::OverApproximate),
            other => Err(format!("unknown mode `{other}` (expected precise or over)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Precise => "precise",
            Mode::OverApproximate => "over",
        })
    }
}

#[derive(Clone, Debug)]
pub struct PropagationConfig {
    pub mode: Mode,
    pub branching_budget: usize,
    /// Limits for each single range query; the clause cap also bounds the
    /// expanded encoding.
    pub per_neuron_budget: EliminationBudget,
    pub worker_count: usize,
    /// Wall-clock limit for the whole propagation.
    pub timeout: Option<Duration>,
    pub heuristic: Arc<dyn ConcretizationHeuristic>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            mode: Mode::Precise,
            branching_budget: 8,
            per_neuron_budget: EliminationBudget::default(),
            worker_count: 10,
            timeout: Some(Duration::from_secs(7200)),
            heuristic: Arc::new(SmallestWidth),
        }
    }
}

impl PropagationConfig {
    pub fn precise() -> Self {
        Self::default()
    }

    pub fn over_approximate(branching_budget: usize) -> Self {
        PropagationConfig {
            mode: Mode::OverApproximate,
            branching_budget,
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.worker_count = workers.max(1);
        self
    }

    pub(crate) fn deadline(&self) -> Option<Instant> {
        self.timeout.map(|d| Instant::now() + d)
    }

    pub(crate) fn limits(&self, stop_at: Option<Instant>) -> Limits {
        self.per_neuron_budget.clone().with_stop_at(stop_at).start()
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, PropagationError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.worker_count.max(1))
            .build()
            .map_err(|e| PropagationError::Pool(e.to_string()))
    }
}

/// A node whose range is being computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Node {
    Hidden(NeuronRef),
    Output(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Hidden(n) => write!(f, "neuron {n}"),
            Node::Output(k) => write!(f, "output y{k}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("box has dimension {found}, the network expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("{node}: elimination timed out with {branching_count} branching neurons held symbolically")]
    Timeout { node: Node, branching_count: usize },
    #[error("{node}: elimination exceeded its {limit} budget with {branching_count} branching neurons held symbolically")]
    Blowup {
        node: Node,
        branching_count: usize,
        limit: &'static str,
    },
    #[error("{node}: {source}")]
    Qe { node: Node, source: QeError },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("branching neurons cannot be concretized in precise mode")]
    ConcretizeInPreciseMode,
    #[error("layer {0} cannot be queried before the layers feeding it are propagated")]
    NotPropagated(usize),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PropagationError {
    fn from_qe(node: Node, branching_count: usize, e: QeError) -> Self {
        match e {
            QeError::Timeout { .. } => PropagationError::Timeout { node, branching_count },
            QeError::Blowup { limit, .. } => PropagationError::Blowup {
                node,
                branching_count,
                limit,
            },
            other => PropagationError::Qe { node, source: other },
        }
    }

    pub fn is_timeout(&self) -> bool {
        matches!(self, PropagationError::Timeout { .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub active: usize,
    pub inactive: usize,
    pub branching: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerReport {
    pub layer: usize,
    pub census: Census,
    /// Branching neurons still held symbolically once the layer is done.
    pub branching_after: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PropagationEvent {
    LayerFinished { layer: usize, census: Census },
    Concretized { neuron: NeuronRef, a_range: Interval },
    IntervalFallback { node: Node, reason: String },
}

impl fmt::Display for PropagationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropagationEvent::LayerFinished { layer, census } => write!(
                f,
                "layer {layer} finished: {} active, {} inactive, {} branching",
                census.active, census.inactive, census.branching
            ),
            PropagationEvent::Concretized { neuron, a_range } => {
                write!(f, "concretized {neuron} to a-range {a_range}")
            }
            PropagationEvent::IntervalFallback { node, reason } => {
                write!(f, "{node}: interval fallback ({reason})")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangeResult {
    pub outputs: Vec<Interval>,
    /// True only if no neuron was concretized and no query fell back.
    pub precise: bool,
    pub layers: Vec<LayerReport>,
    pub events: Vec<PropagationEvent>,
    pub stats: QeStats,
    pub elapsed: Duration,
}

impl RangeResult {
    pub fn branching_history(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.branching_after).collect()
    }
}

/// The range of one neuron together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRange {
    pub range: Interval,
    pub precise: bool,
    pub stats: QeStats,
}

/// The weighted sum feeding neuron `index` of `layer` (1-based; the output
/// layer is `hidden_layers() + 1`), over the surviving variables.
pub fn weighted_sum_expr(
    network: &Network,
    structure: &BehavioralStructure,
    layer: usize,
    index: usize,
) -> Result<AffineExpr, PropagationError> {
    if layer == 0 || layer > network.hidden_layers() + 1 || structure.layers().len() + 1 < layer {
        return Err(PropagationError::NotPropagated(layer));
    }
    let row = &network.weights(layer)[index];
    let mut expr = AffineExpr::constant(network.biases(layer)[index].clone());
    for (i, w) in row.iter().enumerate() {
        if layer == 1 {
            expr.add_term(VarId::Input(i as u32), w.clone());
        } else {
            let feed = structure
                .activation_expr(NeuronRef { layer: layer - 1, index: i })
                .ok_or(PropagationError::NotPropagated(layer))?;
            expr.add_scaled(feed, w);
        }
    }
    Ok(expr)
}

/// Exact range of `expr` over the current encoding. `var` names the
/// fresh variable pinned to `expr`.
fn exact_range(
    structure: &BehavioralStructure,
    expr: &AffineExpr,
    var: VarId,
    limits: &Limits,
) -> Result<(Interval, QeStats), QeError> {
    if expr.is_constant() {
        return Ok((Interval::point(expr.constant_term().clone()), QeStats::default()));
    }
    if structure.is_box_like() {
        return Ok((structure.interval_image(expr), QeStats::default()));
    }
    debug_assert!(structure.is_current(), "encoding must be refreshed before queries");
    let pin = Clause::new([Atom::eq(&AffineExpr::var(var), expr)]);
    let formula = structure.encoding().and_clause(&pin);
    let out = variable_range_with(&formula, var, limits)?;
    Ok((out.value, out.stats))
}

fn resolve(
    structure: &BehavioralStructure,
    node: Node,
    expr: &AffineExpr,
    outcome: Result<(Interval, QeStats), QeError>,
    mode: Mode,
    events: &mut Vec<PropagationEvent>,
) -> Result<NodeRange, PropagationError> {
    match outcome {
        Ok((range, stats)) => Ok(NodeRange {
            range,
            precise: structure.is_precise(),
            stats,
        }),
        Err(e) if mode == Mode::OverApproximate && e.is_resource_limit() => {
            log::debug!("{node}: {e}; using interval bounds");
            events.push(PropagationEvent::IntervalFallback {
                node,
                reason: e.to_string(),
            });
            Ok(NodeRange {
                range: structure.interval_image(expr),
                precise: false,
                stats: QeStats::default(),
            })
        }
        Err(e) => Err(PropagationError::from_qe(node, structure.branching_count(), e)),
    }
}

fn refresh(
    structure: &mut BehavioralStructure,
    config: &PropagationConfig,
    stop_at: Option<Instant>,
    events: &mut Vec<PropagationEvent>,
) -> Result<QeStats, PropagationError> {
    loop {
        match structure.refresh(&config.limits(stop_at)) {
            Ok(stats) => return Ok(stats),
            Err((n, e)) if config.mode == Mode::OverApproximate && e.is_resource_limit() => {
                log::debug!("encoding blew up at {n}: {e}; concretizing further");
                if !concretize_one(structure, config, events)? {
                    return Err(PropagationError::from_qe(Node::Hidden(n), 0, e));
                }
            }
            Err((n, e)) => {
                return Err(PropagationError::from_qe(Node::Hidden(n), structure.branching_count(), e));
            }
        }
    }
}

/// Range of a hidden neuron whose upstream layers are in `structure`.
pub fn neuron_z_range(
    network: &Network,
    structure: &mut BehavioralStructure,
    neuron: NeuronRef,
    config: &PropagationConfig,
) -> Result<NodeRange, PropagationError> {
    let stop_at = config.deadline();
    let mut events = Vec::new();
    refresh(structure, config, stop_at, &mut events)?;
    let expr = weighted_sum_expr(network, structure, neuron.layer, neuron.index)?;
    let outcome = exact_range(structure, &expr, weighted_sum_var(neuron), &config.limits(stop_at));
    resolve(structure, Node::Hidden(neuron), &expr, outcome, config.mode, &mut events)
}

/// Collapses an active or inactive neuron into its affine replacement.
pub fn collapse_linear(
    structure: &BehavioralStructure,
    neuron: NeuronRef,
) -> Result<BehavioralStructure, PropagationError> {
    let mut out = structure.clone();
    out.collapse_in_place(neuron)?;
    Ok(out)
}

/// Replaces a symbolic branching neuron by its a-range bounds.
pub fn concretize_branching(
    structure: &BehavioralStructure,
    neuron: NeuronRef,
    config: &PropagationConfig,
) -> Result<BehavioralStructure, PropagationError> {
    if config.mode == Mode::Precise {
        return Err(PropagationError::ConcretizeInPreciseMode);
    }
    let mut out = structure.clone();
    out.concretize_in_place(neuron)?;
    Ok(out)
}

fn concretize_one(
    structure: &mut BehavioralStructure,
    config: &PropagationConfig,
    events: &mut Vec<PropagationEvent>,
) -> Result<bool, PropagationError> {
    let candidates: Vec<&NeuronState> = structure
        .states()
        .filter(|s| s.status == NeuronStatus::Branching && s.handling == Handling::Symbolic)
        .collect();
    if candidates.is_empty() {
        return Ok(false);
    }
    let pick = config.heuristic.pick(&candidates);
    let a_range = structure.neuron(pick).expect("candidate exists").a_range.clone();
    structure.concretize_in_place(pick)?;
    log::debug!("concretized {pick} to {a_range}");
    events.push(PropagationEvent::Concretized { neuron: pick, a_range });
    Ok(true)
}

/// Computes output ranges over `input_box` on a pool of
/// `config.worker_count` threads.
pub fn propagate(
    network: &Network,
    input_box: &InputBox,
    config: &PropagationConfig,
) -> Result<(RangeResult, BehavioralStructure), PropagationError> {
    config.pool()?.install(|| propagate_in_pool(network, input_box, config))
}

/// [`propagate`] on the current rayon pool.
pub(crate) fn propagate_in_pool(
    network: &Network,
    input_box: &InputBox,
    config: &PropagationConfig,
) -> Result<(RangeResult, BehavioralStructure), PropagationError> {
    if input_box.dim() != network.input_dim() {
        return Err(PropagationError::Dimension {
            expected: network.input_dim(),
            found: input_box.dim(),
        });
    }
    let started = Instant::now();
    let stop_at = config.deadline();
    let mut structure = BehavioralStructure::new(input_box.clone());
    let mut events = Vec::new();
    let mut stats = QeStats::default();
    let mut layers = Vec::with_capacity(network.hidden_layers());

    for layer in 1..=network.hidden_layers() {
        let layer_started = Instant::now();
        stats.merge(&refresh(&mut structure, config, stop_at, &mut events)?);
        let size = network.layer_sizes()[layer];
        let exprs = (0..size)
            .map(|j| weighted_sum_expr(network, &structure, layer, j))
            .collect::<Result<Vec<_>, _>>()?;
        let outcomes: Vec<_> = exprs
            .par_iter()
            .enumerate()
            .map(|(j, e)| {
                let n = NeuronRef { layer, index: j };
                exact_range(&structure, e, weighted_sum_var(n), &config.limits(stop_at))
            })
            .collect();

        let mut states = Vec::with_capacity(size);
        let mut census = Census::default();
        let mut any_fallback = false;
        for (j, (z_expr, outcome)) in exprs.into_iter().zip(outcomes).enumerate() {
            let neuron = NeuronRef { layer, index: j };
            let r = resolve(&structure, Node::Hidden(neuron), &z_expr, outcome, config.mode, &mut events)?;
            stats.merge(&r.stats);
            any_fallback |= !r.precise && structure.is_precise();
            let (status, a_range) = classify_neuron(&r.range);
            match status {
                NeuronStatus::Active => census.active += 1,
                NeuronStatus::Inactive => census.inactive += 1,
                NeuronStatus::Branching => census.branching += 1,
            }
            log::trace!("{neuron}: z in {} -> {status:?}", r.range);
            states.push(NeuronState {
                neuron,
                status,
                handling: Handling::Symbolic,
                z_range: r.range,
                a_range,
                precise: r.precise,
                z_expr,
            });
        }
        if any_fallback {
            structure.mark_imprecise();
        }
        let linear: Vec<NeuronRef> = states
            .iter()
            .filter(|s| s.status != NeuronStatus::Branching)
            .map(|s| s.neuron)
            .collect();
        structure.push_layer(states);
        for n in linear {
            structure.collapse_in_place(n)?;
        }
        if config.mode == Mode::OverApproximate {
            while structure.branching_count() > config.branching_budget {
                concretize_one(&mut structure, config, &mut events)?;
            }
        }
        let report = LayerReport {
            layer,
            census,
            branching_after: structure.branching_count(),
            elapsed: layer_started.elapsed(),
        };
        log::info!(
            "layer {layer}: {} active, {} inactive, {} branching, {} held symbolically",
            census.active,
            census.inactive,
            census.branching,
            report.branching_after
        );
        events.push(PropagationEvent::LayerFinished { layer, census });
        layers.push(report);
    }

    stats.merge(&refresh(&mut structure, config, stop_at, &mut events)?);
    let out_layer = network.hidden_layers() + 1;
    let exprs = (0..network.output_dim())
        .map(|k| weighted_sum_expr(network, &structure, out_layer, k))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<_> = exprs
        .par_iter()
        .enumerate()
        .map(|(k, e)| exact_range(&structure, e, VarId::Output(k as u32), &config.limits(stop_at)))
        .collect();
    let mut outputs = Vec::with_capacity(exprs.len());
    let mut precise = structure.is_precise();
    for (k, (expr, outcome)) in exprs.iter().zip(outcomes).enumerate() {
        let r = resolve(&structure, Node::Output(k), expr, outcome, config.mode, &mut events)?;
        stats.merge(&r.stats);
        precise &= r.precise;
        outputs.push(r.range);
    }
    if !precise {
        structure.mark_imprecise();
    }
    let elapsed = started.elapsed();
    stats.elapsed = elapsed;
    Ok((
        RangeResult {
            outputs,
            precise,
            layers,
            events,
            stats,
            elapsed,
        },
        structure,
    ))
}

/// The activation variable of `n` as used in encodings.
pub fn activation_variable(n: NeuronRef) -> VarId {
    activation_var(n)
}

#[cfg(test)]
mod tests;
