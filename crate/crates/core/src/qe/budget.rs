use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

/// Resource limits for one elimination call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationBudget {
    pub max_clauses: usize,
    pub max_atoms_per_clause: usize,
    /// Wall-clock allowance measured from the start of each call.
    pub deadline: Option<Duration>,
    /// Absolute cut-off shared with an enclosing computation.
    pub stop_at: Option<Instant>,
}

impl Default for EliminationBudget {
    fn default() -> Self {
        EliminationBudget {
            max_clauses: 4096,
            max_atoms_per_clause: 2048,
            deadline: Some(Duration::from_secs(7200)),
            stop_at: None,
        }
    }
}

impl EliminationBudget {
    pub fn unlimited() -> Self {
        EliminationBudget {
            max_clauses: usize::MAX,
            max_atoms_per_clause: usize::MAX,
            deadline: None,
            stop_at: None,
        }
    }

    pub fn with_stop_at(mut self, stop_at: Option<Instant>) -> Self {
        self.stop_at = match (self.stop_at, stop_at) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub(crate) fn start(&self) -> Limits {
        let now = Instant::now();
        let relative = self.deadline.map(|d| now + d);
        let expires = match (relative, self.stop_at) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Limits {
            max_clauses: self.max_clauses,
            max_atoms: self.max_atoms_per_clause,
            expires,
            started: now,
        }
    }
}

/// Diagnostic counters reported with every elimination result.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QeStats {
    pub clauses_produced: usize,
    pub atoms_pruned: usize,
    pub eliminations: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl QeStats {
    pub fn merge(&mut self, other: &QeStats) {
        self.clauses_produced += other.clauses_produced;
        self.atoms_pruned += other.atoms_pruned;
        self.eliminations += other.eliminations;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QeError {
    #[error("elimination exceeded its {limit} budget ({stats:?})")]
    Blowup { limit: &'static str, stats: QeStats },
    #[error("elimination ran past its deadline ({stats:?})")]
    Timeout { stats: QeStats },
    #[error("formula is unsatisfiable; range is empty")]
    EmptyRange,
}

impl QeError {
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, QeError::Blowup { .. } | QeError::Timeout { .. })
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Limits {
    pub max_clauses: usize,
    pub max_atoms: usize,
    pub expires: Option<Instant>,
    pub started: Instant,
}

impl Limits {
    pub fn check_time(&self, stats: &QeStats) -> Result<(), QeError> {
        match self.expires {
            Some(t) if Instant::now() >= t => Err(QeError::Timeout {
                stats: self.stamp(stats),
            }),
            _ => Ok(()),
        }
    }

    pub fn check_atoms(&self, count: usize, stats: &QeStats) -> Result<(), QeError> {
        if count > self.max_atoms {
            return Err(QeError::Blowup {
                limit: "atoms-per-clause",
                stats: self.stamp(stats),
            });
        }
        Ok(())
    }

    pub fn check_clauses(&self, count: usize, stats: &QeStats) -> Result<(), QeError> {
        if count > self.max_clauses {
            return Err(QeError::Blowup {
                limit: "clause",
                stats: self.stamp(stats),
            });
        }
        Ok(())
    }

    pub fn stamp(&self, stats: &QeStats) -> QeStats {
        let mut s = stats.clone();
        s.elapsed = self.started.elapsed();
        s
    }
}
