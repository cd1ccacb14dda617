//! The abstraction-refinement loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{
    build_abstract_model, make_abstraction, AbstractionError, AbstractionMap,
};
use crate::checker::{model_check, CheckOutcome, Property, PropertyError};
use crate::counterexample::Counterexample;
use crate::model::KripkeStructure;
use crate::oracle::oracle_report;
use crate::path_format::PathText;
use crate::refine::{refine, RefineError, RefinementStep};
use crate::spurious::report::ReportDoc;
use crate::spurious::{
    check_spurious_first, check_spurious_heaviest, check_spurious_parallel, default_unwind,
    split_path, LastStateMode, ParallelMode, SpuriousReport, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChoice {
    First,
    Heaviest,
    SplitPath { unwind: Option<usize> },
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CegarOptions {
    pub detector: DetectorChoice,
    /// Runs `First` / `Heaviest` on this many workers when set.
    pub workers: Option<usize>,
    pub last_mode: LastStateMode,
    pub max_iterations: usize,
}

impl Default for CegarOptions {
    fn default() -> Self {
        CegarOptions {
            detector: DetectorChoice::First,
            workers: None,
            last_mode: LastStateMode::Unconstrained,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Error)]
pub enum CegarError {
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error("oracle rejected `{path}` but no split of `{state}` makes progress")]
    Stuck { path: String, state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CegarOutcome {
    Verified,
    RealCounterexample { path: PathText, witness: PathText },
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub abstract_states: usize,
    pub counterexample: PathText,
    pub report: ReportDoc,
    /// Oracle verdict, when the oracle was consulted.
    pub oracle: Option<Verdict>,
    /// The detector called the path real and the oracle refuted it.
    pub detector_incomplete: bool,
    pub refinement: Option<RefinementStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CegarResult {
    pub outcome: CegarOutcome,
    /// Model-checking rounds performed.
    pub iterations: usize,
    pub refinements: usize,
    pub final_abstract_states: usize,
    pub trace: Vec<TraceEntry>,
}

pub fn run_detector(
    model: &KripkeStructure,
    map: &AbstractionMap,
    ce: &Counterexample,
    options: &CegarOptions,
) -> SpuriousReport {
    let mode = options.last_mode;
    match (options.detector, options.workers) {
        (DetectorChoice::First, None) => check_spurious_first(model, map, ce, mode),
        (DetectorChoice::Heaviest, None) => check_spurious_heaviest(model, map, ce, mode),
        (DetectorChoice::First, Some(w)) => {
            check_spurious_parallel(model, map, ce, mode, ParallelMode::FirstDetected, w)
        }
        (DetectorChoice::Heaviest, Some(w)) => {
            check_spurious_parallel(model, map, ce, mode, ParallelMode::Heaviest, w)
        }
        (DetectorChoice::SplitPath { unwind }, _) => split_path(
            model,
            map,
            ce,
            unwind.unwrap_or_else(|| default_unwind(ce, map)),
        ),
        (DetectorChoice::Oracle, _) => oracle_report(model, map, ce).1,
    }
}

/// Checks `property`, starting from the abstraction that hides `invisible`,
/// and refines at failure states until the property is verified, a concrete
/// counterexample is found, or `max_iterations` checks have been spent.
///
/// Detector verdicts of "real" are confirmed with the oracle; when the oracle
/// disagrees, the loop refines from the oracle's failure position.
pub fn cegar<S: AsRef<str>>(
    model: &KripkeStructure,
    invisible: &[S],
    property: &Property,
    options: &CegarOptions,
    timing: bool,
) -> Result<CegarResult, CegarError> {
    let mut map = make_abstraction(model, invisible)?;
    let mut trace = Vec::new();
    let mut refinements = 0;

    for iteration in 1..=options.max_iterations {
        let abstract_model = build_abstract_model(model, &map);
        let ce = match model_check(&abstract_model, property)? {
            CheckOutcome::Verified => {
                return Ok(CegarResult {
                    outcome: CegarOutcome::Verified,
                    iterations: iteration,
                    refinements,
                    final_abstract_states: map.num_classes(),
                    trace,
                })
            }
            CheckOutcome::Violated(ce) => ce,
        };
        let path = ce.to_path(&map);
        let report = run_detector(model, &map, &ce, options);
        let mut entry = TraceEntry {
            iteration,
            abstract_states: map.num_classes(),
            counterexample: path.clone(),
            report: ReportDoc::new(&report, model, &map, &ce, timing),
            oracle: None,
            detector_incomplete: false,
            refinement: None,
        };

        if let (Some(class), Some(partition)) = (report.failure_state, &report.partition) {
            match refine(model, &map, class, partition) {
                Ok((refined, step)) => {
                    entry.refinement = Some(step);
                    trace.push(entry);
                    map = refined;
                    refinements += 1;
                    continue;
                }
                Err(RefineError::DegenerateSplit { .. }) => {}
                Err(e @ RefineError::NotAPartition(_)) => unreachable!("{e}"),
            }
        }

        let (witness, oracle) = oracle_report(model, &map, &ce);
        entry.oracle = Some(oracle.verdict);
        if let Some(witness) = witness {
            trace.push(entry);
            return Ok(CegarResult {
                outcome: CegarOutcome::RealCounterexample {
                    path,
                    witness: witness.to_path(model),
                },
                iterations: iteration,
                refinements,
                final_abstract_states: map.num_classes(),
                trace,
            });
        }
        entry.detector_incomplete = !report.is_spurious();
        let stuck = || CegarError::Stuck {
            path: path.to_string(),
            state: String::new(),
        };
        let (Some(class), Some(partition)) = (oracle.failure_state, &oracle.partition) else {
            return Err(stuck());
        };
        match refine(model, &map, class, partition) {
            Ok((refined, step)) => {
                entry.refinement = Some(step);
                trace.push(entry);
                map = refined;
                refinements += 1;
            }
            Err(_) => {
                return Err(CegarError::Stuck {
                    path: path.to_string(),
                    state: map.name(class).to_string(),
                })
            }
        }
    }

    Ok(CegarResult {
        outcome: CegarOutcome::BudgetExhausted,
        iterations: options.max_iterations,
        refinements,
        final_abstract_states: map.num_classes(),
        trace,
    })
}
