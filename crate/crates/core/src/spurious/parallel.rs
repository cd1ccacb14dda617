use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::thread;
use std::time::Instant;

use super::detect::{cfp_weights, failure_report, heaviest_order, record};
use super::fixpoint::is_failure_state;
use super::{DetectorKind, DetectorStats, InOutSets, LastStateMode, SpuriousReport, Verdict};
use crate::abstraction::AbstractionMap;
use crate::counterexample::Counterexample;
use crate::model::KripkeStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelMode {
    /// Stop all workers once a failure is seen; report the lowest failing index.
    FirstDetected,
    /// Check every position, then report the heaviest failure.
    Heaviest,
}

/// Checks CFP positions on `workers` threads.
///
/// Workers claim positions from a shared counter in visit order, so every
/// position before a claimed one has been claimed too. A check is never
/// abandoned halfway; cancellation only stops new claims. In `FirstDetected`
/// mode this makes the lowest failing index independent of scheduling, and
/// the report only keeps results up to that index. Results past it are
/// counted in `stats.speculative_checks`.
pub fn check_spurious_parallel(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
    last_mode: LastStateMode,
    mode: ParallelMode,
    workers: usize,
) -> SpuriousReport {
    let started = Instant::now();
    let workers = workers.max(1);
    let cfp = ce.cfp();
    let n = cfp.len();
    let weights = cfp_weights(model, map, &cfp);
    let order: Vec<usize> = match mode {
        ParallelMode::FirstDetected => (0..n).collect(),
        ParallelMode::Heaviest => heaviest_order(&weights),
    };

    let slots: Vec<OnceLock<(bool, InOutSets)>> = (0..n).map(|_| OnceLock::new()).collect();
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);

    thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            scope.spawn(|| loop {
                if mode == ParallelMode::FirstDetected && cancel.load(Ordering::Acquire) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::AcqRel);
                if k >= n {
                    break;
                }
                let i = order[k];
                let (failed, sets) = is_failure_state(model, map, &cfp, i, last_mode)
                    .expect("CFP position in range");
                let _ = slots[i].set((failed, sets));
                if failed && mode == ParallelMode::FirstDetected {
                    cancel.store(true, Ordering::Release);
                }
            });
        }
    });

    let results: Vec<Option<(bool, InOutSets)>> =
        slots.into_iter().map(OnceLock::into_inner).collect();

    let detector = match mode {
        ParallelMode::FirstDetected => DetectorKind::ParallelFirst { workers },
        ParallelMode::Heaviest => DetectorKind::ParallelHeaviest { workers },
    };
    let mut stats = DetectorStats {
        sequence_length: n,
        ..Default::default()
    };

    let winner = order
        .iter()
        .position(|&i| matches!(results[i], Some((true, _))));
    // In first-detected mode everything before the winner in visit order has
    // completed; anything after it is speculative.
    let kept = match (mode, winner) {
        (ParallelMode::FirstDetected, Some(w)) => w + 1,
        _ => n,
    };
    let mut checked = vec![None; n];
    let mut failure = None;
    for (k, &i) in order.iter().enumerate() {
        let Some((failed, sets)) = &results[i] else {
            continue;
        };
        if k >= kept {
            stats.speculative_checks += 1;
            continue;
        }
        record(&mut stats, sets);
        checked[i] = Some(!failed);
        if Some(k) == winner {
            failure = Some(sets.clone());
        }
    }
    debug_assert!(order[..kept].iter().all(|&i| checked[i].is_some()));
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
        Some(sets) => failure_report(map, &cfp, sets, base),
        None => base,
    }
}
