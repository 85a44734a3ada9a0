//! Input-space partitioning: split the box, propagate every piece, hull the
//! per-output ranges.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::formula::{InputBox, Interval};
use crate::network::Network;
use crate::propagation::{propagate_in_pool, BehavioralStructure, PropagationConfig, PropagationError, RangeResult};
use crate::rational::{to_decimal, Rational};

pub const DEFAULT_SUBSPACE_CAP: usize = 1024;

/// Splits one dimension `[lo, hi]` into consecutive closed segments.
pub trait PartitionStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn split(&self, lo: &Rational, hi: &Rational, segments: usize) -> Vec<(Rational, Rational)>;
}

impl fmt::Debug for dyn PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Equal-width segments.
pub struct Uniform;

impl PartitionStrategy for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn split(&self, lo: &Rational, hi: &Rational, segments: usize) -> Vec<(Rational, Rational)> {
        let n = Rational::from_integer(segments.into());
        let cut = |k: usize| {
            if k == segments {
                hi.clone()
            } else {
                lo + (hi - lo) * Rational::from_integer(k.into()) / &n
            }
        };
        (0..segments).map(|k| (cut(k), cut(k + 1))).collect()
    }
}

#[derive(Clone)]
pub struct StrategyRegistry {
    entries: Vec<Arc<dyn PartitionStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        StrategyRegistry {
            entries: vec![Arc::new(Uniform)],
        }
    }
}

impl StrategyRegistry {
    pub fn register(&mut self, strategy: Arc<dyn PartitionStrategy>) {
        self.entries.retain(|s| s.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn PartitionStrategy>> {
        self.entries.iter().find(|s| s.name() == name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("plan has {plan} dimensions, the box has {input}")]
    Dimension { plan: usize, input: usize },
    #[error("segment counts must be at least 1")]
    ZeroSegments,
    #[error("plan yields {count} subspaces, above the cap of {cap}")]
    CapExceeded { count: String, cap: usize },
    #[error("invalid plan `{0}`")]
    Syntax(String),
    #[error("subspace {index} {bounds}: {source}")]
    Subspace {
        index: usize,
        bounds: String,
        source: PropagationError,
    },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

#[derive(Clone, Debug)]
pub struct PartitionPlan {
    segments: Vec<usize>,
    strategy: Arc<dyn PartitionStrategy>,
    cap: usize,
}

impl PartitionPlan {
    pub fn uniform(segments: Vec<usize>) -> PartitionPlan {
        PartitionPlan {
            segments,
            strategy: Arc::new(Uniform),
            cap: DEFAULT_SUBSPACE_CAP,
        }
    }

    /// One segment per dimension: the box itself.
    pub fn identity(dim: usize) -> PartitionPlan {
        PartitionPlan::uniform(vec![1; dim])
    }

    pub fn with_strategy(mut self, strategy: Arc<dyn PartitionStrategy>) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn segments(&self) -> &[usize] {
        &self.segments
    }

    pub fn strategy(&self) -> &dyn PartitionStrategy {
        self.strategy.as_ref()
    }

    /// Number of subspaces, or `None` on overflow.
    pub fn count(&self) -> Option<usize> {
        self.segments.iter().try_fold(1usize, |acc, s| acc.checked_mul(*s))
    }

    /// Parses `c1,c2,...`; a single count applies to every one of `dim`
    /// dimensions.
    pub fn parse(text: &str, dim: usize) -> Result<PartitionPlan, PartitionError> {
        let counts = text
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| PartitionError::Syntax(text.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let counts = if counts.len() == 1 && dim > 1 { vec![counts[0]; dim] } else { counts };
        Ok(PartitionPlan::uniform(counts))
    }
}

impl fmt::Display for PartitionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.segments.iter().map(|s| s.to_string()).collect();
        write!(f, "{} ({})", parts.join(","), self.strategy.name())
    }
}

/// Tiles `input_box` per `plan`; the first dimension varies slowest.
pub fn partition_box(input_box: &InputBox, plan: &PartitionPlan) -> Result<Vec<InputBox>, PartitionError> {
    if plan.segments.len() != input_box.dim() {
        return Err(PartitionError::Dimension {
            plan: plan.segments.len(),
            input: input_box.dim(),
        });
    }
    if plan.segments.contains(&0) {
        return Err(PartitionError::ZeroSegments);
    }
    match plan.count() {
        Some(c) if c <= plan.cap => {}
        other => {
            return Err(PartitionError::CapExceeded {
                count: other.map_or_else(|| "more than usize::MAX".to_string(), |c| c.to_string()),
                cap: plan.cap,
            })
        }
    }
    let pieces: Vec<Vec<(Rational, Rational)>> = input_box
        .bounds()
        .iter()
        .zip(&plan.segments)
        .map(|((lo, hi), s)| plan.strategy.split(lo, hi, *s))
        .collect();
    let mut boxes: Vec<Vec<(Rational, Rational)>> = vec![Vec::new()];
    for dim_pieces in &pieces {
        boxes = boxes
            .into_iter()
            .flat_map(|prefix| {
                dim_pieces.iter().map(move |p| {
                    let mut b = prefix.clone();
                    b.push(p.clone());
                    b
                })
            })
            .collect();
    }
    Ok(boxes
        .into_iter()
        .map(|b| InputBox::new(b).expect("segments are ordered"))
        .collect())
}

#[derive(Clone, Debug)]
pub struct SubspaceRange {
    pub index: usize,
    pub input_box: InputBox,
    pub result: RangeResult,
    pub structure: BehavioralStructure,
}

#[derive(Clone, Debug)]
pub struct PartitionedRange {
    /// Interval hull per output over all subspaces.
    pub outputs: Vec<Interval>,
    /// True only if every subspace was propagated precisely.
    pub precise: bool,
    pub subspaces: Vec<SubspaceRange>,
    pub elapsed: Duration,
}

fn render_box(b: &InputBox) -> String {
    let parts: Vec<String> = b
        .bounds()
        .iter()
        .map(|(l, h)| format!("[{}, {}]", to_decimal(l, 8), to_decimal(h, 8)))
        .collect();
    parts.join(" x ")
}

/// Propagates every subspace of the plan on a pool of
/// `config.worker_count` threads and hulls the results.
pub fn propagate_partitioned(
    network: &Network,
    input_box: &InputBox,
    plan: &PartitionPlan,
    config: &PropagationConfig,
) -> Result<PartitionedRange, PartitionError> {
    let boxes = partition_box(input_box, plan)?;
    let pool = config.pool()?;
    let started = Instant::now();
    let results: Vec<Result<(RangeResult, BehavioralStructure), PropagationError>> = pool.install(|| {
        boxes
            .par_iter()
            .map(|b| propagate_in_pool(network, b, config))
            .collect()
    });
    let mut subspaces = Vec::with_capacity(boxes.len());
    let mut failures = Vec::new();
    for (index, (input_box, r)) in boxes.into_iter().zip(results).enumerate() {
        match r {
            Ok((result, structure)) => subspaces.push(SubspaceRange {
                index,
                input_box,
                result,
                structure,
            }),
            Err(e) => failures.push((index, input_box, e)),
        }
    }
    if let Some((index, b, source)) = failures.into_iter().next() {
        return Err(PartitionError::Subspace {
            index,
            bounds: render_box(&b),
            source,
        });
    }
    let mut outputs: Vec<Interval> = subspaces[0].result.outputs.clone();
    for s in &subspaces[1..] {
        for (acc, iv) in outputs.iter_mut().zip(&s.result.outputs) {
            *acc = acc.hull(iv);
        }
    }
    let precise = subspaces.iter().all(|s| s.result.precise);
    log::info!("{} subspaces propagated, precise = {precise}", subspaces.len());
    Ok(PartitionedRange {
        outputs,
        precise,
        subspaces,
        elapsed: started.elapsed(),
    })
}
