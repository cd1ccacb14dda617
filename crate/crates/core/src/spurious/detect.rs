use std::cmp::Reverse;
use std::time::Instant;

use super::fixpoint::{is_failure_state, partition_from_sets};
use super::{
    state_weight, DetectorKind, DetectorStats, InOutSets, LastStateMode, PositionStages,
    SpuriousReport, StateWeight, Verdict,
};
use crate::abstraction::AbstractionMap;
use crate::counterexample::{CfpView, Counterexample};
use crate::model::KripkeStructure;

/// Positions sorted heaviest first; equal weights keep the lower index first.
pub fn heaviest_order(weights: &[StateWeight]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (Reverse(weights[i].weight), i));
    order
}

pub(crate) fn cfp_weights(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
) -> Vec<StateWeight> {
    cfp.states
        .iter()
        .map(|&c| state_weight(model, map, c))
        .collect()
}

pub(crate) fn record(stats: &mut DetectorStats, sets: &InOutSets) {
    stats.positions_examined += 1;
    stats.fixpoint_iterations += sets.in_stages.len() + sets.out_stages.len();
    stats.states_examined += sets.fiber_size;
    stats.stage_counts.push(PositionStages {
        position: sets.position,
        fiber_size: sets.fiber_size,
        in_stages: sets.in_stages.len(),
        out_stages: sets.out_stages.len(),
    });
}

pub(crate) fn failure_report(
    map: &AbstractionMap,
    cfp: &CfpView,
    sets: InOutSets,
    base: SpuriousReport,
) -> SpuriousReport {
    let i = sets.position;
    let partition = partition_from_sets(map.h_inverse(cfp.states[i]), &sets);
    SpuriousReport {
        verdict: Verdict::Spurious,
        failure_index: Some(i),
        failure_state: Some(cfp.states[i]),
        in_out: Some(sets),
        partition: Some(partition),
        ..base
    }
}

/// Visits positions in `order`, stopping at the first failure.
fn scan(
    model: &KripkeStructure,
    map: &AbstractionMap,
    cfp: &CfpView,
    mode: LastStateMode,
    weights: Vec<StateWeight>,
    order: Vec<usize>,
    detector: DetectorKind,
) -> SpuriousReport {
    let started = Instant::now();
    let mut checked = vec![None; cfp.len()];
    let mut stats = DetectorStats {
        sequence_length: cfp.len(),
        ..Default::default()
    };
    let mut failure = None;
    for &i in &order {
        let (failed, sets) =
            is_failure_state(model, map, cfp, i, mode).expect("CFP position in range");
        record(&mut stats, &sets);
        checked[i] = Some(!failed);
        if failed {
            failure = Some(sets);
            break;
        }
    }
    stats.elapsed = started.elapsed();
    let base = SpuriousReport {
        verdict: Verdict::Real,
        failure_index: None,
        failure_state: None,
        in_out: None,
        partition: None,
        weights,
        visit_order: order,
        checked,
        detector,
        stats,
    };
    match failure {
        Some(sets) => failure_report(map, cfp, sets, base),
        None => base,
    }
}

/// Scans the CFP front to back and reports the first failure state.
pub fn check_spurious_first(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
    mode: LastStateMode,
) -> SpuriousReport {
    let cfp = ce.cfp();
    let weights = cfp_weights(model, map, &cfp);
    let order = (0..cfp.len()).collect();
    scan(model, map, &cfp, mode, weights, order, DetectorKind::First)
}

/// Scans the CFP heaviest position first and reports the first failure found
/// in that order.
pub fn check_spurious_heaviest(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
    mode: LastStateMode,
) -> SpuriousReport {
    let cfp = ce.cfp();
    let weights = cfp_weights(model, map, &cfp);
    let order = heaviest_order(&weights);
    scan(
        model,
        map,
        &cfp,
        mode,
        weights,
        order,
        DetectorKind::Heaviest,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{make_abstraction, ClassIdx};
    use crate::fixtures;
    use crate::model::parse_model;

    fn f12_path(text: &str) -> (KripkeStructure, AbstractionMap, Counterexample) {
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let ce = Counterexample::from_path(&text.parse().unwrap(), &map).unwrap();
        (k, map, ce)
    }

    #[test]
    fn f12_first_failure_at_c() {
        let (k, map, ce) = f12_path("finite: group=a group=b group=c group=d");
        let r = check_spurious_first(&k, &map, &ce, LastStateMode::Unconstrained);
        assert_eq!(r.verdict, Verdict::Spurious);
        assert_eq!(r.failure_index, Some(2));
        assert_eq!(r.checked, vec![Some(true), Some(true), Some(false), None]);
        assert_eq!(r.stats.positions_examined, 3);
        assert_eq!(r.stats.sequence_length, 4);
        let sets = r.in_out.unwrap();
        let inter0: Vec<&str> = {
            let cfp = ce.cfp();
            let (_, s0) =
                is_failure_state(&k, &map, &cfp, 0, LastStateMode::Unconstrained).unwrap();
            (&s0.in_set & &s0.out_set)
                .iter()
                .map(|&s| k.id(s))
                .collect()
        };
        assert_eq!(inter0, ["1", "2"]);
        assert!(sets.is_failure());
    }

    #[test]
    fn f12_positions_before_c_overlap_on_expected_states() {
        let (k, map, ce) = f12_path("finite: group=a group=b group=c group=d");
        let cfp = ce.cfp();
        let (_, s1) = is_failure_state(&k, &map, &cfp, 1, LastStateMode::Unconstrained).unwrap();
        let inter: Vec<&str> = (&s1.in_set & &s1.out_set)
            .iter()
            .map(|&s| k.id(s))
            .collect();
        assert_eq!(inter, ["4", "5"]);
    }

    #[test]
    fn traffic_light_lasso_passes_the_local_check() {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let ce =
            Counterexample::from_path(&"lasso: state=stop ( state=go )".parse().unwrap(), &map)
                .unwrap();
        let r = check_spurious_first(&k, &map, &ce, LastStateMode::Unconstrained);
        assert_eq!(r.verdict, Verdict::Real);
        assert_eq!(r.stats.positions_examined, 2);
        assert_eq!(r.checked, vec![Some(true), Some(true)]);
    }

    #[test]
    fn identity_real_path() {
        let k = fixtures::traffic_light();
        let map = make_abstraction::<&str>(&k, &[]).unwrap();
        let ce = Counterexample::finite(vec![ClassIdx(0), ClassIdx(1), ClassIdx(2)]).unwrap();
        assert_eq!(
            check_spurious_first(&k, &map, &ce, LastStateMode::Unconstrained).verdict,
            Verdict::Real
        );
        assert_eq!(
            check_spurious_heaviest(&k, &map, &ce, LastStateMode::Unconstrained).verdict,
            Verdict::Real
        );
    }

    #[test]
    fn f12_heaviest_finds_c() {
        let (k, map, ce) = f12_path("finite: group=a group=b group=c group=d");
        let r = check_spurious_heaviest(&k, &map, &ce, LastStateMode::Unconstrained);
        assert_eq!(r.failure_index, Some(2));
        let ws: Vec<usize> = r.weights.iter().map(|w| w.weight).collect();
        // a: 0 in (initial only); b: 3 in, 2 out; c: 2 in, 2 out; d: 2 in, 0 out
        assert_eq!(ws, vec![0, 6, 4, 0]);
        assert_eq!(r.visit_order, vec![1, 2, 0, 3]);
    }

    #[test]
    fn heaviest_prefers_heavier_failure() {
        // Strict mode makes the last position d fail as well (no deadlock in d);
        // raise d's weight above c's by giving d extra in/out traffic.
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let ce = Counterexample::from_path(
            &"finite: group=a group=b group=c group=d".parse().unwrap(),
            &map,
        )
        .unwrap();
        let strict = LastStateMode::Strict;
        let first = check_spurious_first(&k, &map, &ce, strict);
        assert_eq!(first.failure_index, Some(2));
        let cfp = ce.cfp();
        let failures: Vec<usize> = (0..cfp.len())
            .filter(|&i| is_failure_state(&k, &map, &cfp, i, strict).unwrap().0)
            .collect();
        assert_eq!(failures, vec![2, 3]);

        let heavy = parse_model(&format!(
            "{}trans 3 10\ntrans 6 11\ntrans 12 1\ntrans 11 2\ntrans 10 4\n",
            fixtures::F12
        ))
        .unwrap();
        let map = make_abstraction(&heavy, &["slot"]).unwrap();
        let cfp = ce.cfp();
        let ws = cfp_weights(&heavy, &map, &cfp);
        assert_eq!(ws[2].weight, 4);
        assert!(ws[3].weight > ws[2].weight);
        let failures: Vec<usize> = (0..cfp.len())
            .filter(|&i| is_failure_state(&heavy, &map, &cfp, i, strict).unwrap().0)
            .collect();
        assert!(failures.contains(&3));
        let r = check_spurious_heaviest(&heavy, &map, &ce, strict);
        assert_eq!(r.failure_index, Some(3));
    }

    #[test]
    fn ties_go_to_lower_index() {
        let w = StateWeight {
            e_in: 1,
            e_out: 1,
            weight: 1,
        };
        let z = StateWeight::default();
        assert_eq!(heaviest_order(&[z, w, w, z]), vec![1, 2, 0, 3]);
    }
}
