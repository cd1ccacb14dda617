mod common;

use std::collections::BTreeSet;

use cegar_core::cegar::{cegar, CegarOptions, CegarOutcome, DetectorChoice};
use cegar_core::checker::{eval_prop, Formula, PropertyKind};
use cegar_core::oracle::concretize;
use cegar_core::spurious::{
    check_spurious_first, check_spurious_heaviest, check_spurious_parallel, default_unwind,
    is_failure_state, split_path, state_weight, ParallelMode,
};
use cegar_core::{
    build_abstract_model, model_check, parse_model, refine, CheckOutcome, ClassIdx, LastStateMode,
    PathKind, Property, StateIdx,
};
use common::{checker_paths, instance, params, random_paths};
use proptest::prelude::*;

const MODES: [LastStateMode; 2] = [LastStateMode::Unconstrained, LastStateMode::Strict];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn render_parse_round_trip(p in params()) {
        let inst = instance(&p);
        let again = parse_model(&inst.model.render()).unwrap();
        prop_assert_eq!(&again, &inst.model);
        prop_assert!(again.validate().is_ok());
    }

    #[test]
    fn deadlocks_are_exactly_the_states_without_successors(p in params()) {
        let k = instance(&p).model;
        for i in 0..k.num_states() {
            let s = StateIdx(i);
            prop_assert_eq!(k.successors(s).is_empty(), k.is_deadlock(s));
        }
    }

    #[test]
    fn fibers_partition_the_states(p in params()) {
        let inst = instance(&p);
        let mut all: Vec<StateIdx> = (0..inst.map.num_classes())
            .flat_map(|c| inst.map.h_inverse(ClassIdx(c)).to_vec())
            .collect();
        prop_assert!((0..inst.map.num_classes()).all(|c| !inst.map.h_inverse(ClassIdx(c)).is_empty()));
        all.sort();
        prop_assert_eq!(all, (0..inst.model.num_states()).map(StateIdx).collect::<Vec<_>>());
    }

    #[test]
    fn abstract_model_simulates_concrete(p in params()) {
        let inst = instance(&p);
        let (k, map, m) = (&inst.model, &inst.map, &inst.abstract_model);
        for &s in k.initial() {
            prop_assert!(m.is_initial(map.h(s)));
        }
        for (s, t) in k.transitions() {
            prop_assert!(m.has_transition(map.h(s), map.h(t)));
        }
        for (a, b) in m.transitions() {
            let lifted = map.h_inverse(a).iter().any(|&s| k.successors(s).iter().any(|&t| map.h(t) == b));
            prop_assert!(lifted, "abstract edge without concrete origin");
        }
    }

    #[test]
    fn detectors_are_sound_and_stage_bounded(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        let mut paths = checker_paths(&inst);
        paths.extend(random_paths(&inst, seed, 6, 8));
        for ce in &paths {
            let real = concretize(k, map, ce).is_some();
            for mode in MODES {
                for r in [check_spurious_first(k, map, ce, mode), check_spurious_heaviest(k, map, ce, mode)] {
                    for st in &r.stats.stage_counts {
                        prop_assert!(st.in_stages <= st.fiber_size && st.out_stages <= st.fiber_size);
                    }
                    prop_assert_eq!(r.is_spurious(), r.failure_index.is_some());
                    if mode == LastStateMode::Unconstrained && real {
                        prop_assert!(!r.is_spurious(), "detector refuted a real path");
                    }
                    if let (Some(part), Some(io)) = (&r.partition, &r.in_out) {
                        prop_assert_eq!(&part.dead, &io.in_set);
                        prop_assert_eq!(&part.bad, &io.out_set);
                        prop_assert!(part.dead.is_disjoint(&part.bad));
                    }
                }
            }
        }
    }

    #[test]
    fn split_path_matches_oracle_on_finite_paths(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 8, 10).iter().filter(|c| c.kind() == PathKind::Finite) {
            let real = concretize(k, map, ce).is_some();
            prop_assert_eq!(split_path(k, map, ce, 1).is_spurious(), !real);
        }
    }

    #[test]
    fn real_lassos_survive_every_unwinding(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 8, 6).iter().filter(|c| c.kind() == PathKind::Lasso) {
            let real = concretize(k, map, ce).is_some();
            if real {
                for unwind in 1..=4 {
                    prop_assert!(!split_path(k, map, ce, unwind).is_spurious());
                }
            }
            prop_assert_eq!(split_path(k, map, ce, default_unwind(ce, map)).is_spurious(), !real);
        }
    }

    #[test]
    fn oracle_witnesses_are_genuine(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        let mut paths = checker_paths(&inst);
        paths.extend(random_paths(&inst, seed, 6, 8));
        for ce in &paths {
            if let Some(w) = concretize(k, map, ce) {
                prop_assert!(w.is_path_of(k));
                prop_assert!(w.projects_onto(map, ce));
            }
        }
    }

    #[test]
    fn failure_state_is_local(p in params(), seed in any::<u64>(), flips in proptest::collection::vec((any::<usize>(), any::<usize>()), 1..12)) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 3, 6) {
            let cfp = ce.cfp();
            for i in 0..cfp.len() {
                let mut guarded: BTreeSet<ClassIdx> = BTreeSet::from([cfp.states[i]]);
                guarded.extend(cfp.predecessor(i));
                guarded.extend(cfp.successor(i));
                let outside: Vec<StateIdx> = (0..k.num_states())
                    .map(StateIdx)
                    .filter(|&s| !guarded.contains(&map.h(s)))
                    .collect();
                if outside.is_empty() {
                    continue;
                }
                let mut edges: BTreeSet<(StateIdx, StateIdx)> = k.transitions().collect();
                for &(a, b) in &flips {
                    let e = (outside[a % outside.len()], outside[b % outside.len()]);
                    if !edges.remove(&e) {
                        edges.insert(e);
                    }
                }
                let mutated = k.with_transitions(edges).unwrap();
                for mode in MODES {
                    let before = is_failure_state(k, map, &cfp, i, mode).unwrap();
                    let after = is_failure_state(&mutated, map, &cfp, i, mode).unwrap();
                    prop_assert_eq!(before.0, after.0);
                    prop_assert_eq!(before.1, after.1);
                }
            }
        }
    }

    #[test]
    fn heaviest_returns_a_maximal_failure(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 6, 8) {
            let cfp = ce.cfp();
            for mode in MODES {
                let failures: Vec<usize> = (0..cfp.len())
                    .filter(|&i| is_failure_state(k, map, &cfp, i, mode).unwrap().0)
                    .collect();
                let r = check_spurious_heaviest(k, map, &ce, mode);
                let weight = |i: usize| state_weight(k, map, cfp.states[i]).weight;
                match r.failure_index {
                    None => prop_assert!(failures.is_empty()),
                    Some(f) => {
                        prop_assert!(failures.contains(&f));
                        for &g in &failures {
                            prop_assert!(weight(f) > weight(g) || (weight(f) == weight(g) && f <= g));
                        }
                    }
                }
                let first = check_spurious_first(k, map, &ce, mode);
                prop_assert_eq!(first.failure_index, failures.first().copied());
            }
        }
    }

    #[test]
    fn parallel_matches_sequential(p in params(), seed in any::<u64>(), workers in 1usize..6) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 4, 8) {
            let mode = LastStateMode::Unconstrained;
            let seq_h = check_spurious_heaviest(k, map, &ce, mode);
            let par_h = check_spurious_parallel(k, map, &ce, mode, ParallelMode::Heaviest, workers);
            prop_assert_eq!(seq_h.failure_index, par_h.failure_index);
            prop_assert_eq!(&seq_h.partition, &par_h.partition);
            let seq_f = check_spurious_first(k, map, &ce, mode);
            let par_f = check_spurious_parallel(k, map, &ce, mode, ParallelMode::FirstDetected, workers);
            prop_assert_eq!(seq_f.failure_index, par_f.failure_index);
            prop_assert_eq!(&seq_f.partition, &par_f.partition);
        }
    }

    #[test]
    fn refinement_preserves_simulation_and_grows(p in params(), seed in any::<u64>()) {
        let inst = instance(&p);
        let (k, map) = (&inst.model, &inst.map);
        for ce in random_paths(&inst, seed, 4, 8) {
            let r = check_spurious_first(k, map, &ce, LastStateMode::Unconstrained);
            let (Some(c), Some(part)) = (r.failure_state, &r.partition) else { continue };
            let Ok((refined, step)) = refine(k, map, c, part) else { continue };
            prop_assert_eq!(refined.num_classes(), map.num_classes() + step.new_classes.len() - 1);
            let m = build_abstract_model(k, &refined);
            for (s, t) in k.transitions() {
                prop_assert!(m.has_transition(refined.h(s), refined.h(t)));
            }
        }
    }

    #[test]
    fn checker_counterexamples_are_valid_violations(p in params()) {
        let inst = instance(&p);
        let m = &inst.abstract_model;
        for v in 0..inst.domain {
            let phi: Formula = format!("g={v}").parse().unwrap();
            let holds = |c: ClassIdx| eval_prop(m, c, &phi).unwrap();
            for kind in [PropertyKind::Invariant, PropertyKind::Recurrence] {
                let prop = Property { kind, formula: phi.clone() };
                match model_check(m, &prop).unwrap() {
                    CheckOutcome::Violated(ce) => {
                        prop_assert!(ce.validate(m).is_ok());
                        match kind {
                            PropertyKind::Invariant => {
                                prop_assert!(!holds(*ce.states().last().unwrap()));
                                prop_assert!(ce.states()[..ce.len() - 1].iter().all(|&c| holds(c)));
                                prop_assert_eq!(ce.len(), shortest_violation(&abstract_graph(m, &holds)).unwrap());
                            }
                            PropertyKind::Recurrence => {
                                let start = ce.loop_start().unwrap();
                                prop_assert!(ce.states()[start..].iter().all(|&c| !holds(c)));
                            }
                        }
                    }
                    CheckOutcome::Verified => match kind {
                        PropertyKind::Invariant => prop_assert!(shortest_violation(&abstract_graph(m, &holds)).is_none()),
                        PropertyKind::Recurrence => prop_assert!(!has_reachable_bad_cycle(&abstract_graph(m, &holds))),
                    },
                }
            }
        }
    }

    #[test]
    fn cegar_is_sound_and_terminates(p in params()) {
        let inst = instance(&p);
        let k = &inst.model;
        let invisible: Vec<String> = inst.map.invisible().map(str::to_string).collect();
        for v in 0..inst.domain {
            for prop in [format!("AG !(g={v})"), format!("GF g={v}")] {
                let property: Property = prop.parse().unwrap();
                let concrete = concrete_graph(k, v, property.kind == PropertyKind::Invariant);
                let exact = match property.kind {
                    PropertyKind::Invariant => shortest_violation(&concrete).is_none(),
                    PropertyKind::Recurrence => !has_reachable_bad_cycle(&concrete),
                };
                for detector in [DetectorChoice::First, DetectorChoice::Heaviest, DetectorChoice::SplitPath { unwind: Some(1) }] {
                    let options = CegarOptions { detector, max_iterations: k.num_states() + 2, ..Default::default() };
                    let r = cegar(k, &invisible, &property, &options, false).unwrap();
                    prop_assert!(r.refinements <= k.num_states());
                    match &r.outcome {
                        CegarOutcome::Verified => prop_assert!(exact, "{} verified but fails concretely", prop),
                        CegarOutcome::RealCounterexample { witness, .. } => {
                            prop_assert!(!exact);
                            prop_assert!(!witness.items.is_empty());
                        }
                        CegarOutcome::BudgetExhausted => prop_assert!(false, "budget exhausted"),
                    }
                }
            }
        }
    }
}

struct Graph<'a> {
    n: usize,
    initial: Vec<usize>,
    succ: Box<dyn Fn(usize) -> Vec<usize> + 'a>,
    holds: Box<dyn Fn(usize) -> bool + 'a>,
}

fn abstract_graph<'a>(
    m: &'a cegar_core::abstraction::AbstractModel,
    holds: &'a dyn Fn(ClassIdx) -> bool,
) -> Graph<'a> {
    Graph {
        n: m.num_states(),
        initial: m.initial().iter().map(|c| c.0).collect(),
        succ: Box::new(move |c| m.successors(ClassIdx(c)).iter().map(|t| t.0).collect()),
        holds: Box::new(move |c| holds(ClassIdx(c))),
    }
}

/// The concrete model itself, with `g=v` (or its negation) read off each state.
fn concrete_graph(k: &cegar_core::KripkeStructure, v: usize, negate: bool) -> Graph<'_> {
    let value = v.to_string();
    Graph {
        n: k.num_states(),
        initial: k.initial().iter().map(|s| s.0).collect(),
        succ: Box::new(move |s| k.successors(StateIdx(s)).iter().map(|t| t.0).collect()),
        holds: Box::new(move |s| (k.value(StateIdx(s), 0) == value) != negate),
    }
}

fn shortest_violation(g: &Graph) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.n];
    let mut queue = std::collections::VecDeque::new();
    for &c in &g.initial {
        dist[c] = 1;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        if !(g.holds)(c) {
            return Some(dist[c]);
        }
        for t in (g.succ)(c) {
            if dist[t] == usize::MAX {
                dist[t] = dist[c] + 1;
                queue.push_back(t);
            }
        }
    }
    None
}

/// Brute force: some reachable `¬φ` node reaches itself through `¬φ` nodes.
fn has_reachable_bad_cycle(g: &Graph) -> bool {
    let mut reach = vec![false; g.n];
    let mut stack = g.initial.clone();
    for &c in &stack {
        reach[c] = true;
    }
    while let Some(c) = stack.pop() {
        for t in (g.succ)(c) {
            if !reach[t] {
                reach[t] = true;
                stack.push(t);
            }
        }
    }
    (0..g.n).filter(|&c| reach[c] && !(g.holds)(c)).any(|c| {
        let mut seen = vec![false; g.n];
        let mut stack = vec![c];
        while let Some(u) = stack.pop() {
            for t in (g.succ)(u) {
                if (g.holds)(t) {
                    continue;
                }
                if t == c {
                    return true;
                }
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        false
    })
}
