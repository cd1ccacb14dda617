//! Splitting a failure fiber into its dead / bad / isolated parts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractionMap, ClassIdx};
use crate::model::{KripkeStructure, StateIdx};
use crate::spurious::Partition;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error(
        "splitting `{state}` yields {parts} nonempty class(es); refinement cannot progress here"
    )]
    DegenerateSplit { state: String, parts: usize },
    #[error("partition does not cover the fiber of `{0}` exactly")]
    NotAPartition(String),
}

/// One accepted split, recorded by class names and concrete state ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub failure_state: String,
    pub dead: Vec<String>,
    pub bad: Vec<String>,
    pub isolated: Vec<String>,
    pub new_classes: Vec<String>,
}

/// Replaces the fiber of `class` by its nonempty dead, bad and isolated parts
/// (in that order). Every other fiber is left alone.
pub fn refine(
    model: &KripkeStructure,
    map: &AbstractionMap,
    class: ClassIdx,
    partition: &Partition,
) -> Result<(AbstractionMap, RefinementStep), RefineError> {
    let name = map.name(class).to_string();
    let parts: Vec<Vec<StateIdx>> = [&partition.dead, &partition.bad, &partition.isolated]
        .into_iter()
        .map(|p| p.iter().copied().collect())
        .collect();

    let mut covered: Vec<StateIdx> = parts.iter().flatten().copied().collect();
    covered.sort_unstable();
    if covered != map.h_inverse(class) {
        return Err(RefineError::NotAPartition(name));
    }
    let nonempty = partition.nonempty_parts();
    if nonempty < 2 {
        return Err(RefineError::DegenerateSplit {
            state: name,
            parts: nonempty,
        });
    }

    let mut refined = map.clone();
    let fresh = refined.split_class(class, &parts);
    let ids = |set: &std::collections::BTreeSet<StateIdx>| -> Vec<String> {
        set.iter().map(|&s| model.id(s).to_string()).collect()
    };
    let step = RefinementStep {
        failure_state: name,
        dead: ids(&partition.dead),
        bad: ids(&partition.bad),
        isolated: ids(&partition.isolated),
        new_classes: fresh.iter().map(|&c| refined.name(c).to_string()).collect(),
    };
    Ok((refined, step))
}
