//! Failure-state analysis of abstract counterexamples.
//!
//! For a position `i` of the complete finite prefix, `In` is the part of the
//! fiber `h⁻(ŝi)` reachable from the previous fiber (or from the initial
//! states at position 0) while staying inside the fiber, and `Out` is the part
//! from which the next fiber can be reached while staying inside. Position `i`
//! is a failure state when the two are disjoint; a counterexample with at
//! least one failure state is spurious.
//!
//! The detectors scan the prefix in order ([`check_spurious_first`]), by
//! decreasing weight ([`check_spurious_heaviest`]), or on a worker pool
//! ([`check_spurious_parallel`]). [`split_path`] is the forward-image baseline
//! that unwinds loops.

mod detect;
mod fixpoint;
mod parallel;
pub mod report;
mod split_path;
mod weight;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::ClassIdx;
use crate::model::StateIdx;

pub use detect::{check_spurious_first, check_spurious_heaviest, heaviest_order};
pub use fixpoint::{in_set, is_failure_state, out_set, partition_origins};
pub use parallel::{check_spurious_parallel, ParallelMode};
pub use split_path::{default_unwind, split_path};
pub use weight::{state_weight, StateWeight};

/// How `Out` is seeded at the last position of a finite counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LastStateMode {
    /// Every origin of the last abstract state counts as able to continue.
    #[default]
    Unconstrained,
    /// Only origins that can reach a deadlock state within the fiber count.
    Strict,
}

/// A least fixpoint recorded stage by stage. Each stage holds the states
/// first added in that round, so stages are disjoint and nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stages {
    pub set: BTreeSet<StateIdx>,
    pub stages: Vec<Vec<StateIdx>>,
}

impl Stages {
    pub fn iterations(&self) -> usize {
        self.stages.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InOutSets {
    pub position: usize,
    pub fiber_size: usize,
    pub in_set: BTreeSet<StateIdx>,
    pub out_set: BTreeSet<StateIdx>,
    pub in_stages: Vec<Vec<StateIdx>>,
    pub out_stages: Vec<Vec<StateIdx>>,
}

impl InOutSets {
    pub fn is_failure(&self) -> bool {
        self.in_set.is_disjoint(&self.out_set)
    }
}

/// Dead / bad / isolated split of a failure fiber.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub dead: BTreeSet<StateIdx>,
    pub bad: BTreeSet<StateIdx>,
    pub isolated: BTreeSet<StateIdx>,
}

impl Partition {
    pub fn nonempty_parts(&self) -> usize {
        [&self.dead, &self.bad, &self.isolated]
            .iter()
            .filter(|p| !p.is_empty())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpuriousError {
    #[error("position {0} is not a failure state (In and Out overlap)")]
    NotAFailure(usize),
    #[error("position {position} is outside a prefix of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Real,
    Spurious,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Real => "real",
            Verdict::Spurious => "spurious",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    First,
    Heaviest,
    ParallelFirst {
        workers: usize,
    },
    ParallelHeaviest {
        workers: usize,
    },
    /// `unwind` is `None` for finite paths, which are never unwound.
    SplitPath {
        unwind: Option<usize>,
    },
    Oracle,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorKind::First => f.write_str("first"),
            DetectorKind::Heaviest => f.write_str("heaviest"),
            DetectorKind::ParallelFirst { workers } => write!(f, "par-first:{workers}"),
            DetectorKind::ParallelHeaviest { workers } => write!(f, "par-heaviest:{workers}"),
            DetectorKind::SplitPath { unwind: None } => f.write_str("splitpath"),
            DetectorKind::SplitPath { unwind: Some(u) } => write!(f, "splitpath:{u}"),
            DetectorKind::Oracle => f.write_str("oracle"),
        }
    }
}

/// Per-position fixpoint sizes, kept for the stage-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionStages {
    pub position: usize,
    pub fiber_size: usize,
    pub in_stages: usize,
    pub out_stages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetectorStats {
    /// Length of the sequence the detector works over: the CFP, or the
    /// unwound sequence for SplitPath.
    pub sequence_length: usize,
    /// Positions actually checked before the detector stopped.
    pub positions_examined: usize,
    /// Sum of `In` and `Out` stage counts over the examined positions.
    pub fixpoint_iterations: usize,
    /// Sum of fiber sizes over the examined positions.
    pub states_examined: usize,
    pub stage_counts: Vec<PositionStages>,
    /// SplitPath image sizes `|M_0|, |M_1|, ...`.
    pub image_sizes: Vec<usize>,
    pub unwind_used: Option<usize>,
    /// Failure position within the unwound sequence (SplitPath only).
    pub unwound_failure_index: Option<usize>,
    /// Checks finished after cancellation was requested; scheduling dependent.
    pub speculative_checks: usize,
    pub elapsed: Duration,
}

/// Outcome of one detector run over one counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpuriousReport {
    pub verdict: Verdict,
    /// Failure position in the CFP.
    pub failure_index: Option<usize>,
    pub failure_state: Option<ClassIdx>,
    pub in_out: Option<InOutSets>,
    pub partition: Option<Partition>,
    /// Weight of each CFP position.
    pub weights: Vec<StateWeight>,
    /// Order in which positions were (to be) visited.
    pub visit_order: Vec<usize>,
    /// `c[k]`: `Some(true)` not a failure, `Some(false)` failure, `None` unchecked.
    pub checked: Vec<Option<bool>>,
    pub detector: DetectorKind,
    pub stats: DetectorStats,
}

impl SpuriousReport {
    pub fn is_spurious(&self) -> bool {
        self.verdict == Verdict::Spurious
    }
}
