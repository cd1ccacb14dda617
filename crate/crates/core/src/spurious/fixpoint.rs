use std::collections::BTreeSet;

use super::{InOutSets, LastStateMode, Partition, SpuriousError, Stages};
use crate::abstraction::{AbstractionMap, ClassIdx};
use crate::counterexample::CfpView;
use crate::model::{KripkeStructure, StateIdx};

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

/// Closes `seed` under one-step moves that stay inside the fiber of `class`.
fn closure(
    model: &KripkeStructure,
    map: &AbstractionMap,
    class: ClassIdx,
    seed: BTreeSet<StateIdx>,
    direction: Direction,
) -> Stages {
    let mut set = seed.clone();
    let mut stages = Vec::new();
    let mut frontier: Vec<StateIdx> = seed.into_iter().collect();
    while !frontier.is_empty() {
        let mut next = BTreeSet::new();
        for &s in &frontier {
            let step = match direction {
                Direction::Forward => model.successors(s),
                Direction::Backward => model.predecessors(s),
            };
            for &t in step {
                if map.h(t) == class && !set.contains(&t) {
                    next.insert(t);
                }
            }
        }
        stages.push(frontier);
        set.extend(next.iter().copied());
        frontier = next.into_iter().collect();
    }
    Stages { set, stages }
}

fn check_position(cfp: &CfpView, i: usize) -> Result<(), SpuriousError> {
    if i < cfp.len() {
        Ok(())
    } else {
        Err(SpuriousError::PositionOutOfRange {
            position: i,
            len: cfp.len(),
        })
    }
}

/// `In` at position `i`: seeded by the origins entered from the previous
/// fiber, or by the initial origins at position 0.
pub fn in_set(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
    i: usize,
) -> Result<Stages, SpuriousError> {
    check_position(cfp, i)?;
    let class = cfp.states[i];
    let fiber = map.h_inverse(class);
    let seed: BTreeSet<StateIdx> = match cfp.predecessor(i) {
        None => fiber
            .iter()
            .copied()
            .filter(|&s| model.is_initial(s))
            .collect(),
        Some(prev) => fiber
            .iter()
            .copied()
            .filter(|&s| model.predecessors(s).iter().any(|&p| map.h(p) == prev))
            .collect(),
    };
    Ok(closure(model, map, class, seed, Direction::Forward))
}

/// `Out` at position `i`: seeded by the origins with an edge into the next
/// fiber. At the last position of a finite path the seed depends on `mode`.
pub fn out_set(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
    i: usize,
    mode: LastStateMode,
) -> Result<Stages, SpuriousError> {
    check_position(cfp, i)?;
    let class = cfp.states[i];
    let fiber = map.h_inverse(class);
    let seed: BTreeSet<StateIdx> = match (cfp.successor(i), mode) {
        (Some(next), _) => fiber
            .iter()
            .copied()
            .filter(|&s| model.successors(s).iter().any(|&t| map.h(t) == next))
            .collect(),
        (None, LastStateMode::Unconstrained) => fiber.iter().copied().collect(),
        (None, LastStateMode::Strict) => fiber
            .iter()
            .copied()
            .filter(|&s| model.is_deadlock(s))
            .collect(),
    };
    Ok(closure(model, map, class, seed, Direction::Backward))
}

/// Computes `In` and `Out` at `i`; the position fails iff they are disjoint.
pub fn is_failure_state(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
    i: usize,
    mode: LastStateMode,
) -> Result<(bool, InOutSets), SpuriousError> {
    let ins = in_set(model, map, cfp, i)?;
    let outs = out_set(model, map, cfp, i, mode)?;
    let sets = InOutSets {
        position: i,
        fiber_size: map.h_inverse(cfp.states[i]).len(),
        in_set: ins.set,
        out_set: outs.set,
        in_stages: ins.stages,
        out_stages: outs.stages,
    };
    Ok((sets.is_failure(), sets))
}

/// Dead = `In`, bad = `Out`, isolated = the rest of the fiber.
pub fn partition_origins(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
    i: usize,
    mode: LastStateMode,
) -> Result<Partition, SpuriousError> {
    let (failure, sets) = is_failure_state(model, map, cfp, i, mode)?;
    if !failure {
        return Err(SpuriousError::NotAFailure(i));
    }
    Ok(partition_from_sets(map.h_inverse(cfp.states[i]), &sets))
}

pub(crate) fn partition_from_sets(fiber: &[StateIdx], sets: &InOutSets) -> Partition {
    let isolated = fiber
        .iter()
        .copied()
        .filter(|s| !sets.in_set.contains(s) && !sets.out_set.contains(s))
        .collect();
    Partition {
        dead: sets.in_set.clone(),
        bad: sets.out_set.clone(),
        isolated,
    }
}
