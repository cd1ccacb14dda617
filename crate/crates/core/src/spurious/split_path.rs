use std::collections::BTreeSet;
use std::time::Instant;

use super::detect::cfp_weights;
use super::{DetectorKind, DetectorStats, Partition, SpuriousReport, Verdict};
use crate::abstraction::{AbstractionMap, ClassIdx};
use crate::counterexample::Counterexample;
use crate::model::{KripkeStructure, StateIdx};

/// Loop repetitions used for lassos when none is given: CFP length times the
/// largest fiber, enough for the image sequence to die out whenever the lasso
/// has no concrete counterpart.
pub fn default_unwind(ce: &Counterexample, map: &AbstractionMap) -> usize {
    (ce.len() * map.max_fiber_size()).max(1)
}

/// Maps an index of the unwound sequence back onto the CFP.
fn fold_index(ce: &Counterexample, u: usize) -> usize {
    let n = ce.len();
    match ce.loop_start() {
        Some(i) if u >= n => i + (u - n) % (n - i),
        _ => u,
    }
}

/// Forward-image baseline: `M_0 = I ∩ h⁻(ŝ0)`, `M_k = R(M_{k-1}) ∩ h⁻(ŝk)`.
/// The first empty `M_k` makes `ŝ_{k-1}` the failure state (`ŝ0` if `M_0` is
/// empty). Lassos are first unwound `unwind` times (at least once).
///
/// On failure the partition is dead = `M_{k-1}`, bad = origins with an edge
/// into the next fiber, isolated = the rest.
pub fn split_path(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
    unwind: usize,
) -> SpuriousReport {
    let started = Instant::now();
    let unwind = ce.loop_start().map(|_| unwind.max(1));
    let seq = ce.unwound(unwind.unwrap_or(0));
    let cfp = ce.cfp();
    let mut stats = DetectorStats {
        sequence_length: seq.len(),
        unwind_used: unwind,
        ..Default::default()
    };

    let fiber_filter = |c: ClassIdx,
                        it: &mut dyn Iterator<Item = StateIdx>|
     -> BTreeSet<StateIdx> { it.filter(|&s| map.h(s) == c).collect() };

    let mut images: Vec<BTreeSet<StateIdx>> = Vec::with_capacity(seq.len());
    let m0 = fiber_filter(seq[0], &mut model.initial().iter().copied());
    let mut empty_at = None;
    stats.image_sizes.push(m0.len());
    if m0.is_empty() {
        empty_at = Some(0);
    }
    images.push(m0);
    if empty_at.is_none() {
        for k in 1..seq.len() {
            let prev = &images[k - 1];
            let mk = fiber_filter(
                seq[k],
                &mut prev
                    .iter()
                    .flat_map(|&s| model.successors(s).iter().copied()),
            );
            stats.image_sizes.push(mk.len());
            let empty = mk.is_empty();
            images.push(mk);
            if empty {
                empty_at = Some(k);
                break;
            }
        }
    }
    stats.positions_examined = images.len();
    stats.states_examined = stats.image_sizes.iter().sum();

    let weights = cfp_weights(model, map, &cfp);
    let mut report = SpuriousReport {
        verdict: Verdict::Real,
        failure_index: None,
        failure_state: None,
        in_out: None,
        partition: None,
        weights,
        visit_order: Vec::new(),
        checked: Vec::new(),
        detector: DetectorKind::SplitPath { unwind },
        stats,
    };

    if let Some(k) = empty_at {
        let u = k.saturating_sub(1);
        let class = seq[u];
        let dead: BTreeSet<StateIdx> = if k == 0 {
            BTreeSet::new()
        } else {
            images[u].clone()
        };
        let next = if k == 0 {
            seq.get(1).copied()
        } else {
            Some(seq[k])
        };
        let bad: BTreeSet<StateIdx> = match next {
            Some(next) => map
                .h_inverse(class)
                .iter()
                .copied()
                .filter(|&s| model.successors(s).iter().any(|&t| map.h(t) == next))
                .collect(),
            None => BTreeSet::new(),
        };
        let isolated = map
            .h_inverse(class)
            .iter()
            .copied()
            .filter(|s| !dead.contains(s) && !bad.contains(s))
            .collect();
        report.verdict = Verdict::Spurious;
        report.failure_index = Some(fold_index(ce, u));
        report.failure_state = Some(class);
        report.partition = Some(Partition {
            dead,
            bad,
            isolated,
        });
        report.stats.unwound_failure_index = Some(u);
    }
    report.stats.elapsed = started.elapsed();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::make_abstraction;
    use crate::fixtures;
    use crate::model::parse_model;

    fn ids(k: &KripkeStructure, set: &BTreeSet<StateIdx>) -> Vec<String> {
        set.iter().map(|&s| k.id(s).to_string()).collect()
    }

    #[test]
    fn f12_images() {
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let ce = Counterexample::from_path(
            &"finite: group=a group=b group=c group=d".parse().unwrap(),
            &map,
        )
        .unwrap();
        let r = split_path(&k, &map, &ce, 0);
        assert_eq!(r.stats.image_sizes, vec![2, 2, 1, 0]);
        assert_eq!(r.verdict, Verdict::Spurious);
        assert_eq!(r.failure_index, Some(2));
        assert_eq!(r.stats.unwind_used, None);
        let p = r.partition.unwrap();
        assert_eq!(ids(&k, &p.dead), ["9"]);
        assert_eq!(ids(&k, &p.bad), ["7"]);
        assert_eq!(ids(&k, &p.isolated), ["8"]);
    }

    #[test]
    fn traffic_light_needs_two_unwindings() {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let ce =
            Counterexample::from_path(&"lasso: state=stop ( state=go )".parse().unwrap(), &map)
                .unwrap();
        let once = split_path(&k, &map, &ce, 1);
        assert_eq!(once.verdict, Verdict::Real);
        assert_eq!(once.stats.image_sizes, vec![1, 1, 1]);
        assert_eq!(once.stats.sequence_length, 3);

        let twice = split_path(&k, &map, &ce, 2);
        assert_eq!(twice.verdict, Verdict::Spurious);
        assert_eq!(twice.stats.image_sizes, vec![1, 1, 1, 0]);
        assert_eq!(twice.stats.unwound_failure_index, Some(2));
        assert_eq!(twice.failure_index, Some(1));
        let p = twice.partition.unwrap();
        assert_eq!(ids(&k, &p.dead), ["yellow"]);
        assert_eq!(ids(&k, &p.bad), ["green"]);
        assert!(p.isolated.is_empty());
    }

    #[test]
    fn empty_initial_image_fails_at_zero() {
        let k = parse_model("var x : 0 1\nstate a x=0\nstate b x=1\ninit a\ntrans b a\n").unwrap();
        let map = make_abstraction::<&str>(&k, &[]).unwrap();
        let ce = Counterexample::finite(vec![map.h(k.index_of("b").unwrap())]).unwrap();
        let r = split_path(&k, &map, &ce, 0);
        assert_eq!(r.failure_index, Some(0));
        assert_eq!(r.stats.image_sizes, vec![0]);
    }

    #[test]
    fn folding_unwound_indices() {
        let ce = Counterexample::lasso(vec![ClassIdx(0), ClassIdx(1), ClassIdx(2)], 1).unwrap();
        let folded: Vec<usize> = (0..9).map(|u| fold_index(&ce, u)).collect();
        assert_eq!(folded, vec![0, 1, 2, 1, 2, 1, 2, 1, 2]);
    }
}
