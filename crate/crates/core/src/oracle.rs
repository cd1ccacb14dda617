//! Exact concretization: does some concrete path (or lasso) map position by
//! position onto the abstract counterexample?
//!
//! Finite paths are decided by layered reachability over `(position, state)`
//! nodes. Lassos are decided on the product of the model with the lasso's
//! position cycle: the lasso is real iff a reachable product node lies on a
//! cycle (found with Tarjan's SCC algorithm; a self-loop counts).

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::abstraction::{AbstractionMap, ClassIdx};
use crate::counterexample::Counterexample;
use crate::model::{KripkeStructure, StateIdx};
use crate::path_format::PathText;
use crate::spurious::{default_unwind, split_path, DetectorKind, SpuriousReport, Verdict};

/// A concrete path or lasso of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcretePath {
    pub states: Vec<StateIdx>,
    pub loop_start: Option<usize>,
}

impl ConcretePath {
    pub fn to_path(&self, model: &KripkeStructure) -> PathText {
        PathText {
            items: self
                .states
                .iter()
                .map(|&s| model.id(s).to_string())
                .collect(),
            loop_start: self.loop_start,
        }
    }

    /// Starts in an initial state and follows transitions, including the
    /// loop-back edge of a lasso.
    pub fn is_path_of(&self, model: &KripkeStructure) -> bool {
        let Some(&first) = self.states.first() else {
            return false;
        };
        if !model.is_initial(first) {
            return false;
        }
        let step = |a: StateIdx, b: StateIdx| model.successors(a).binary_search(&b).is_ok();
        if !self.states.windows(2).all(|w| step(w[0], w[1])) {
            return false;
        }
        match self.loop_start {
            Some(i) => {
                i < self.states.len()
                    && step(*self.states.last().expect("nonempty"), self.states[i])
            }
            None => true,
        }
    }

    /// Compares the (possibly infinite) words position by position under `h`.
    pub fn projects_onto(&self, map: &AbstractionMap, ce: &Counterexample) -> bool {
        match (self.loop_start, ce.loop_start()) {
            (None, None) => {
                self.states.len() == ce.len()
                    && self
                        .states
                        .iter()
                        .zip(ce.states())
                        .all(|(&s, &c)| map.h(s) == c)
            }
            (Some(cs), Some(as_)) => {
                let cp = self.states.len() - cs;
                let ap = ce.len() - as_;
                let horizon = cs.max(as_) + lcm(cp, ap);
                (0..horizon).all(|t| {
                    let s = self.states[unroll(t, cs, cp)];
                    let c = ce.states()[unroll(t, as_, ap)];
                    map.h(s) == c
                })
            }
            _ => false,
        }
    }
}

fn unroll(t: usize, start: usize, period: usize) -> usize {
    if t < start {
        t
    } else {
        start + (t - start) % period
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Dispatches on the counterexample's shape.
pub fn concretize(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
) -> Option<ConcretePath> {
    match ce.loop_start() {
        None => concretize_finite(model, map, ce.states()),
        Some(i) => concretize_lasso(model, map, ce.states(), i),
    }
}

/// Lexicographically least concrete path over `classes`, if any.
pub fn concretize_finite(
    model: &KripkeStructure,
    map: &AbstractionMap,
    classes: &[ClassIdx],
) -> Option<ConcretePath> {
    let n = classes.len();
    if n == 0 {
        return None;
    }
    // alive[i]: origins at layer i that can still reach the last layer
    let mut alive: Vec<BTreeSet<StateIdx>> = vec![BTreeSet::new(); n];
    alive[n - 1] = map.h_inverse(classes[n - 1]).iter().copied().collect();
    for i in (0..n - 1).rev() {
        let (head, tail) = alive.split_at_mut(i + 1);
        let next = &tail[0];
        head[i] = map
            .h_inverse(classes[i])
            .iter()
            .copied()
            .filter(|&s| model.successors(s).iter().any(|t| next.contains(t)))
            .collect();
    }
    let mut current = alive[0].iter().copied().find(|&s| model.is_initial(s))?;
    let mut states = vec![current];
    for layer in &alive[1..] {
        current = model
            .successors(current)
            .iter()
            .copied()
            .find(|t| layer.contains(t))?;
        states.push(current);
    }
    Some(ConcretePath {
        states,
        loop_start: None,
    })
}

type Node = (usize, StateIdx);

/// Concrete lasso witness for the abstract lasso `classes` looping back to
/// `loop_start`, if any.
pub fn concretize_lasso(
    model: &KripkeStructure,
    map: &AbstractionMap,
    classes: &[ClassIdx],
    loop_start: usize,
) -> Option<ConcretePath> {
    let n = classes.len();
    if n == 0 || loop_start >= n {
        return None;
    }
    let next_pos = |p: usize| if p + 1 < n { p + 1 } else { loop_start };

    // Reachable product, breadth first from the sorted start nodes.
    let mut ids: HashMap<Node, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for &s in map.h_inverse(classes[0]) {
        if model.is_initial(s) {
            ids.insert((0, s), nodes.len());
            nodes.push((0, s));
            parent.push(None);
            adj.push(Vec::new());
            queue.push_back(nodes.len() - 1);
        }
    }
    while let Some(u) = queue.pop_front() {
        let (p, s) = nodes[u];
        let q = next_pos(p);
        for &t in model.successors(s) {
            if map.h(t) != classes[q] {
                continue;
            }
            let v = *ids.entry((q, t)).or_insert_with(|| {
                nodes.push((q, t));
                parent.push(Some(u));
                adj.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            adj[u].push(v);
        }
    }

    let comp = tarjan(&adj);
    let mut comp_size = HashMap::new();
    for &c in &comp {
        *comp_size.entry(c).or_insert(0usize) += 1;
    }
    let cyclic = |u: usize| comp_size[&comp[u]] > 1 || adj[u].contains(&u);
    let target = (0..nodes.len())
        .filter(|&u| cyclic(u))
        .min_by_key(|&u| nodes[u])?;

    let mut stem = Vec::new();
    let mut cursor = parent[target];
    while let Some(u) = cursor {
        stem.push(nodes[u].1);
        cursor = parent[u];
    }
    stem.reverse();

    let cycle = cycle_through(target, &adj, &comp);
    let loop_at = stem.len();
    stem.extend(cycle.into_iter().map(|u| nodes[u].1));
    Some(ConcretePath {
        states: stem,
        loop_start: Some(loop_at),
    })
}

/// Shortest cycle from `start` back to itself inside its component.
fn cycle_through(start: usize, adj: &[Vec<usize>], comp: &[usize]) -> Vec<usize> {
    if adj[start].contains(&start) {
        return vec![start];
    }
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if comp[v] != comp[start] {
                continue;
            }
            if v == start {
                let mut path = vec![u];
                let mut x = u;
                while x != start {
                    x = parent[&x];
                    path.push(x);
                }
                path.reverse();
                return path;
            }
            if let Entry::Vacant(e) = parent.entry(v) {
                e.insert(u);
                queue.push_back(v);
            }
        }
    }
    unreachable!("node in a nontrivial component lies on a cycle")
}

/// Iterative Tarjan; returns the component id of every node.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut counter = 0;
    let mut components = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        let mut calls: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&(v, edge)) = calls.last() {
            if edge < adj[v].len() {
                calls.last_mut().expect("nonempty").1 += 1;
                let w = adj[v][edge];
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                calls.pop();
                if let Some(&(u, _)) = calls.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component on stack");
                        on_stack[w] = false;
                        comp[w] = components;
                        if w == v {
                            break;
                        }
                    }
                    components += 1;
                }
            }
        }
    }
    comp
}

/// Runs the oracle as a detector. When the counterexample is spurious the
/// failure position and partition come from SplitPath with an unwinding
/// large enough to expose the break (the first empty layer for finite
/// paths).
pub fn oracle_report(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
) -> (Option<ConcretePath>, SpuriousReport) {
    let witness = concretize(model, map, ce);
    let mut report = split_path(model, map, ce, default_unwind(ce, map));
    report.detector = DetectorKind::Oracle;
    if witness.is_some() {
        report.verdict = Verdict::Real;
        report.failure_index = None;
        report.failure_state = None;
        report.partition = None;
        report.stats.unwound_failure_index = None;
    } else {
        report.verdict = Verdict::Spurious;
    }
    (witness, report)
}
