//! Detector comparison over generated models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{build_abstract_model, make_abstraction, AbstractionMap};
use crate::checker::{model_check, CheckOutcome, Property};
use crate::counterexample::{Counterexample, PathKind};
use crate::gen::{gen_random_model, GenParams, GROUP_VAR};
use crate::model::{parse_model, KripkeStructure};
use crate::oracle::{concretize, oracle_report};
use crate::spurious::{
    check_spurious_first, check_spurious_heaviest, check_spurious_parallel, default_unwind,
    split_path, LastStateMode, ParallelMode, SpuriousReport, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchDetector {
    First,
    Heaviest,
    ParallelFirst(usize),
    ParallelHeaviest(usize),
    /// `None` uses the default unwinding.
    SplitPath(Option<usize>),
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown detector `{0}` (expected first, heaviest, par-first:N, par-heaviest:N, splitpath[:N] or oracle)")]
pub struct UnknownDetector(pub String);

impl FromStr for BenchDetector {
    type Err = UnknownDetector;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownDetector(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<usize>().map_err(|_| err())?)),
            None => (s, None),
        };
        match (head, arg) {
            ("first", None) => Ok(BenchDetector::First),
            ("heaviest", None) => Ok(BenchDetector::Heaviest),
            ("par-first", Some(w)) if w > 0 => Ok(BenchDetector::ParallelFirst(w)),
            ("par-heaviest", Some(w)) if w > 0 => Ok(BenchDetector::ParallelHeaviest(w)),
            ("splitpath", arg) => Ok(BenchDetector::SplitPath(arg)),
            ("oracle", None) => Ok(BenchDetector::Oracle),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for BenchDetector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchDetector::First => f.write_str("first"),
            BenchDetector::Heaviest => f.write_str("heaviest"),
            BenchDetector::ParallelFirst(w) => write!(f, "par-first:{w}"),
            BenchDetector::ParallelHeaviest(w) => write!(f, "par-heaviest:{w}"),
            BenchDetector::SplitPath(None) => f.write_str("splitpath"),
            BenchDetector::SplitPath(Some(u)) => write!(f, "splitpath:{u}"),
            BenchDetector::Oracle => f.write_str("oracle"),
        }
    }
}

impl Serialize for BenchDetector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BenchDetector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl BenchDetector {
    pub fn run(
        self,
        model: &KripkeStructure,
        map: &AbstractionMap,
        ce: &Counterexample,
        last_mode: LastStateMode,
    ) -> SpuriousReport {
        match self {
            BenchDetector::First => check_spurious_first(model, map, ce, last_mode),
            BenchDetector::Heaviest => check_spurious_heaviest(model, map, ce, last_mode),
            BenchDetector::ParallelFirst(w) => {
                check_spurious_parallel(model, map, ce, last_mode, ParallelMode::FirstDetected, w)
            }
            BenchDetector::ParallelHeaviest(w) => {
                check_spurious_parallel(model, map, ce, last_mode, ParallelMode::Heaviest, w)
            }
            BenchDetector::SplitPath(u) => {
                split_path(model, map, ce, u.unwrap_or_else(|| default_unwind(ce, map)))
            }
            BenchDetector::Oracle => oracle_report(model, map, ce).1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    Finite,
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corpus {
    Finite,
    Lasso,
    Both,
}

impl Corpus {
    fn includes(self, kind: CorpusKind) -> bool {
        matches!(
            (self, kind),
            (Corpus::Both, _)
                | (Corpus::Finite, CorpusKind::Finite)
                | (Corpus::Lasso, CorpusKind::Lasso)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub models: usize,
    pub trials: usize,
    pub min_states: usize,
    pub max_states: usize,
    pub min_density: f64,
    pub max_density: f64,
    pub num_vars: usize,
    pub domain_size: usize,
    pub invisible_fraction: f64,
    pub corpus: Corpus,
    pub detectors: Vec<BenchDetector>,
    pub last_mode: LastStateMode,
    pub seed: u64,
    #[serde(skip)]
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            models: 20,
            trials: 2,
            min_states: 6,
            max_states: 60,
            min_density: 0.02,
            max_density: 0.1,
            num_vars: 3,
            domain_size: 4,
            invisible_fraction: 0.5,
            corpus: Corpus::Both,
            detectors: vec![
                BenchDetector::First,
                BenchDetector::Heaviest,
                BenchDetector::SplitPath(None),
            ],
            last_mode: LastStateMode::Unconstrained,
            seed: 0,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    /// Detector says real, oracle says spurious.
    DetectorIncomplete,
    /// Detector says spurious, oracle found a witness.
    Unsound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: usize,
    pub trial: usize,
    pub states: usize,
    pub property: String,
    pub kind: CorpusKind,
    pub path: String,
    pub cfp_length: usize,
    pub detector: BenchDetector,
    pub verdict: Verdict,
    pub oracle: Verdict,
    pub agreement: Agreement,
    pub failure_index: Option<usize>,
    /// Length of the sequence the detector works over.
    pub positions_examined: usize,
    /// Positions checked before stopping.
    pub positions_checked: usize,
    pub fixpoint_iterations: usize,
    pub unwind_used: Option<usize>,
    pub stage_bound_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub detector: BenchDetector,
    pub kind: CorpusKind,
    pub rows: usize,
    pub agree: usize,
    pub detector_incomplete: usize,
    pub unsound: usize,
    pub spurious: usize,
    pub mean_positions_examined: f64,
    pub mean_positions_checked: f64,
    pub mean_cfp_length: f64,
    pub stage_bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    /// Generated models that produced at least one counterexample row.
    pub models_with_rows: usize,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Parameters of the `index`-th model of a run; pure in `(config, index)`.
pub fn model_params(config: &BenchConfig, index: usize) -> GenParams {
    let mut rng =
        ChaCha8Rng::seed_from_u64(config.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let lo = config.min_states.max(1);
    let hi = config.max_states.max(lo);
    let (dlo, dhi) = (
        config.min_density,
        config.max_density.max(config.min_density),
    );
    GenParams {
        num_states: rng.random_range(lo..=hi),
        num_vars: config.num_vars,
        domain_size: config.domain_size,
        edge_density: if dhi > dlo {
            rng.random_range(dlo..=dhi)
        } else {
            dlo
        },
        invisible_fraction: config.invisible_fraction,
        seed: rng.random(),
    }
}

fn rows_for_model(config: &BenchConfig, index: usize) -> Vec<BenchRow> {
    let Ok(generated) = gen_random_model(&model_params(config, index)) else {
        return Vec::new();
    };
    let model = parse_model(&generated.text).expect("generator output parses");
    let map = make_abstraction(&model, &generated.invisible).expect("generator variables exist");
    let abstract_model = build_abstract_model(&model, &map);

    let mut rows = Vec::new();
    for trial in 0..config.trials {
        let value = trial % config.domain_size;
        for (kind, prop) in [
            (CorpusKind::Finite, format!("AG !({GROUP_VAR}={value})")),
            (CorpusKind::Lasso, format!("GF {GROUP_VAR}={value}")),
        ] {
            if !config.corpus.includes(kind) {
                continue;
            }
            let property: Property = prop.parse().expect("generated property parses");
            let ce = match model_check(&abstract_model, &property) {
                Ok(CheckOutcome::Violated(ce)) => ce,
                _ => continue,
            };
            debug_assert_eq!(
                ce.kind() == PathKind::Lasso,
                kind == CorpusKind::Lasso,
                "checker emits the expected shape"
            );
            let oracle = if concretize(&model, &map, &ce).is_some() {
                Verdict::Real
            } else {
                Verdict::Spurious
            };
            let path = ce.to_path(&map).to_string();
            for &detector in &config.detectors {
                let started = Instant::now();
                let report = detector.run(&model, &map, &ce, config.last_mode);
                let elapsed = started.elapsed();
                let agreement = match (report.verdict, oracle) {
                    (a, b) if a == b => Agreement::Agree,
                    (Verdict::Real, _) => Agreement::DetectorIncomplete,
                    (Verdict::Spurious, _) => Agreement::Unsound,
                };
                let s = &report.stats;
                rows.push(BenchRow {
                    model: index,
                    trial,
                    states: model.num_states(),
                    property: prop.clone(),
                    kind,
                    path: path.clone(),
                    cfp_length: ce.len(),
                    detector,
                    verdict: report.verdict,
                    oracle,
                    agreement,
                    failure_index: report.failure_index,
                    positions_examined: s.sequence_length,
                    positions_checked: s.positions_examined,
                    fixpoint_iterations: s.fixpoint_iterations,
                    unwind_used: s.unwind_used,
                    stage_bound_ok: s
                        .stage_counts
                        .iter()
                        .all(|p| p.in_stages <= p.fiber_size && p.out_stages <= p.fiber_size),
                    wall_time_us: config.timing.then_some(elapsed.as_micros() as u64),
                });
            }
        }
    }
    rows
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = values.fold((0usize, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

pub fn aggregate(detectors: &[BenchDetector], rows: &[BenchRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(CorpusKind, usize), Vec<&BenchRow>> = BTreeMap::new();
    for row in rows {
        let slot = detectors
            .iter()
            .position(|&d| d == row.detector)
            .unwrap_or(usize::MAX);
        groups.entry((row.kind, slot)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((kind, _), rs)| {
            let count = |a: Agreement| rs.iter().filter(|r| r.agreement == a).count();
            Aggregate {
                detector: rs[0].detector,
                kind,
                rows: rs.len(),
                agree: count(Agreement::Agree),
                detector_incomplete: count(Agreement::DetectorIncomplete),
                unsound: count(Agreement::Unsound),
                spurious: rs.iter().filter(|r| r.verdict == Verdict::Spurious).count(),
                mean_positions_examined: mean(rs.iter().map(|r| r.positions_examined)),
                mean_positions_checked: mean(rs.iter().map(|r| r.positions_checked)),
                mean_cfp_length: mean(rs.iter().map(|r| r.cfp_length)),
                stage_bound_violations: rs.iter().filter(|r| !r.stage_bound_ok).count(),
            }
        })
        .collect()
}

/// Generates `config.models` models, asks the checker for counterexamples to
/// `AG !(g=v)` and `GF g=v`, and runs every configured detector against the
/// oracle verdict. Rows are computed in parallel and reported in
/// `(model, trial, kind, detector)` order.
pub fn bench_compare(config: &BenchConfig) -> BenchReport {
    let per_model: Vec<Vec<BenchRow>> = (0..config.models)
        .into_par_iter()
        .map(|i| rows_for_model(config, i))
        .collect();
    let models_with_rows = per_model.iter().filter(|r| !r.is_empty()).count();
    let rows: Vec<BenchRow> = per_model.into_iter().flatten().collect();
    BenchReport {
        config: config.clone(),
        models_with_rows,
        aggregates: aggregate(&config.detectors, &rows),
        rows,
    }
}

impl BenchReport {
    pub fn aggregate_for(&self, detector: BenchDetector, kind: CorpusKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.detector == detector && a.kind == kind)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{} models ({} with counterexamples), {} rows\n",
            self.config.models,
            self.models_with_rows,
            self.rows.len()
        );
        out.push_str(
            "detector        kind    rows  agree  incomplete  unsound  mean-examined  mean-cfp\n",
        );
        for a in &self.aggregates {
            let kind = match a.kind {
                CorpusKind::Finite => "finite",
                CorpusKind::Lasso => "lasso",
            };
            out.push_str(&format!(
                "{:<15} {:<7} {:>4}  {:>5}  {:>10}  {:>7}  {:>13.2}  {:>8.2}\n",
                a.detector.to_string(),
                kind,
                a.rows,
                a.agree,
                a.detector_incomplete,
                a.unsound,
                a.mean_positions_examined,
                a.mean_cfp_length
            ));
        }
        out
    }
}
