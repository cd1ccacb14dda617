//! Explicit-state checking of `AG φ` and `GF φ` on the abstract model.

mod property;

use std::collections::VecDeque;

pub use property::{eval_prop, BoundFormula, Formula, Property, PropertyError, PropertyKind};

use crate::abstraction::{AbstractModel, ClassIdx};
use crate::counterexample::Counterexample;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Verified,
    Violated(Counterexample),
}

pub fn model_check(
    model: &AbstractModel,
    property: &Property,
) -> Result<CheckOutcome, PropertyError> {
    let phi = property.formula.bind(model)?;
    let found = match property.kind {
        PropertyKind::Invariant => find_invariant_counterexample(model, &phi),
        PropertyKind::Recurrence => find_recurrence_counterexample(model, &phi),
    };
    Ok(found.map_or(CheckOutcome::Verified, CheckOutcome::Violated))
}

/// Shortest path from an initial state to a state violating `phi`, by
/// breadth-first search in state order.
pub fn find_invariant_counterexample(
    model: &AbstractModel,
    phi: &BoundFormula,
) -> Option<Counterexample> {
    let n = model.num_states();
    let mut parent: Vec<Option<ClassIdx>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &c in model.initial() {
        if !phi.eval(model, c) {
            return Some(Counterexample::finite(vec![c]).expect("nonempty"));
        }
        seen[c.0] = true;
        queue.push_back(c);
    }
    while let Some(u) = queue.pop_front() {
        for &t in model.successors(u) {
            if seen[t.0] {
                continue;
            }
            seen[t.0] = true;
            parent[t.0] = Some(u);
            if !phi.eval(model, t) {
                let mut path = vec![t];
                let mut cursor = parent[t.0];
                while let Some(p) = cursor {
                    path.push(p);
                    cursor = parent[p.0];
                }
                path.reverse();
                return Some(Counterexample::finite(path).expect("nonempty"));
            }
            queue.push_back(t);
        }
    }
    None
}

/// A reachable lasso whose loop never visits a `phi` state, found by nested
/// depth-first search.
///
/// The search runs on the product with a two-state monitor: `wait` follows
/// any transition, `loop` only enters states violating `phi` and never leaves.
/// Accepting cycles of the product are exactly the `phi`-free loops.
pub fn find_recurrence_counterexample(
    model: &AbstractModel,
    phi: &BoundFormula,
) -> Option<Counterexample> {
    let n = model.num_states();
    let bad: Vec<bool> = (0..n).map(|c| !phi.eval(model, ClassIdx(c))).collect();
    // node = class * 2 + monitor, monitor 1 = accepting
    let succs = |node: usize| -> Vec<usize> {
        let (c, monitor) = (node / 2, node % 2);
        let mut out = Vec::new();
        for &t in model.successors(ClassIdx(c)) {
            if bad[t.0] {
                out.push(t.0 * 2 + 1);
            }
            if monitor == 0 {
                out.push(t.0 * 2);
            }
        }
        out
    };
    let mut roots = Vec::new();
    for &c in model.initial() {
        if bad[c.0] {
            roots.push(c.0 * 2 + 1);
        }
        roots.push(c.0 * 2);
    }

    let mut blue = vec![false; 2 * n];
    let mut red = vec![false; 2 * n];
    for root in roots {
        if blue[root] {
            continue;
        }
        blue[root] = true;
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, succs(root), 0)];
        while let Some(frame) = stack.last_mut() {
            if frame.2 < frame.1.len() {
                let t = frame.1[frame.2];
                frame.2 += 1;
                if !blue[t] {
                    blue[t] = true;
                    stack.push((t, succs(t), 0));
                }
                continue;
            }
            let seed = frame.0;
            if seed % 2 == 1 {
                if let Some(cycle) = red_search(seed, &succs, &mut red) {
                    let stem: Vec<ClassIdx> = stack[..stack.len() - 1]
                        .iter()
                        .map(|f| ClassIdx(f.0 / 2))
                        .collect();
                    let cycle: Vec<ClassIdx> = cycle.into_iter().map(|v| ClassIdx(v / 2)).collect();
                    return Some(normalize_lasso(stem, cycle));
                }
            }
            stack.pop();
        }
    }
    None
}

fn red_search(
    seed: usize,
    succs: &impl Fn(usize) -> Vec<usize>,
    red: &mut [bool],
) -> Option<Vec<usize>> {
    red[seed] = true;
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(seed, succs(seed), 0)];
    while let Some(frame) = stack.last_mut() {
        if frame.2 < frame.1.len() {
            let t = frame.1[frame.2];
            frame.2 += 1;
            if t == seed {
                return Some(stack.iter().map(|f| f.0).collect());
            }
            if !red[t] {
                red[t] = true;
                stack.push((t, succs(t), 0));
            }
        } else {
            stack.pop();
        }
    }
    None
}

/// Folds trailing stem states into the loop while they repeat it.
fn normalize_lasso(mut stem: Vec<ClassIdx>, mut cycle: Vec<ClassIdx>) -> Counterexample {
    while let (Some(&s), Some(&c)) = (stem.last(), cycle.last()) {
        if s != c {
            break;
        }
        stem.pop();
        cycle.rotate_right(1);
    }
    let loop_start = stem.len();
    stem.extend(cycle);
    Counterexample::lasso(stem, loop_start).expect("nonempty loop")
}
