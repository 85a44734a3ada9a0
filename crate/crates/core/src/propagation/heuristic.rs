//! Choice of which symbolic branching neuron to concretize when the
//! branching budget is exceeded.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::structure::{a_width, NeuronState};
use crate::network::NeuronRef;

pub trait ConcretizationHeuristic: Send + Sync {
    fn name(&self) -> &'static str;

    /// Picks one neuron out of `candidates`, which is non-empty and sorted
    /// by layer then index.
    fn pick(&self, candidates: &[&NeuronState]) -> NeuronRef;
}

impl fmt::Debug for dyn ConcretizationHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Widths compared with unbounded ranges last.
fn by_width(a: &NeuronState, b: &NeuronState) -> Ordering {
    match (a_width(a), a_width(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Smallest a-range width first; ties go to the earliest layer, then the
/// lowest index.
pub struct SmallestWidth;

impl ConcretizationHeuristic for SmallestWidth {
    fn name(&self) -> &'static str {
        "smallest-width"
    }

    fn pick(&self, candidates: &[&NeuronState]) -> NeuronRef {
        candidates
            .iter()
            .min_by(|a, b| by_width(a, b).then(a.neuron.cmp(&b.neuron)))
            .expect("non-empty")
            .neuron
    }
}

/// Largest a-range width first.
pub struct LargestWidth;

impl ConcretizationHeuristic for LargestWidth {
    fn name(&self) -> &'static str {
        "largest-width"
    }

    fn pick(&self, candidates: &[&NeuronState]) -> NeuronRef {
        candidates
            .iter()
            .min_by(|a, b| by_width(b, a).then(a.neuron.cmp(&b.neuron)))
            .expect("non-empty")
            .neuron
    }
}

/// Oldest neuron first, so the most recent layers stay exact.
pub struct EarliestFirst;

impl ConcretizationHeuristic for EarliestFirst {
    fn name(&self) -> &'static str {
        "earliest-first"
    }

    fn pick(&self, candidates: &[&NeuronState]) -> NeuronRef {
        candidates[0].neuron
    }
}

/// Newest neuron first.
pub struct LatestFirst;

impl ConcretizationHeuristic for LatestFirst {
    fn name(&self) -> &'static str {
        "latest-first"
    }

    fn pick(&self, candidates: &[&NeuronState]) -> NeuronRef {
        candidates.iter().map(|s| s.neuron).max().expect("non-empty")
    }
}

/// Heuristics selectable by name.
#[derive(Clone)]
pub struct HeuristicRegistry {
    entries: Vec<Arc<dyn ConcretizationHeuristic>>,
}

impl Default for HeuristicRegistry {
    fn default() -> Self {
        HeuristicRegistry {
            entries: vec![
                Arc::new(SmallestWidth),
                Arc::new(LargestWidth),
                Arc::new(EarliestFirst),
                Arc::new(LatestFirst),
            ],
        }
    }
}

impl HeuristicRegistry {
    /// Adds or replaces the heuristic registered under its name.
    pub fn register(&mut self, heuristic: Arc<dyn ConcretizationHeuristic>) {
        self.entries.retain(|h| h.name() != heuristic.name());
        self.entries.push(heuristic);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn ConcretizationHeuristic>> {
        self.entries.iter().find(|h| h.name() == name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|h| h.name()).collect()
    }
}
