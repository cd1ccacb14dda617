//! Machine-readable and human-readable views of a [`SpuriousReport`].
//!
//! [`ReportDoc`] is the one report schema shared by every command that emits
//! detector results. Timing is left out unless asked for, so that documents
//! from identical inputs are byte-identical.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PositionStages, SpuriousReport, Verdict};
use crate::abstraction::AbstractionMap;
use crate::counterexample::Counterexample;
use crate::model::{KripkeStructure, StateIdx};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightDoc {
    pub position: usize,
    pub state: String,
    pub e_in: usize,
    pub e_out: usize,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub sequence_length: usize,
    pub positions_examined: usize,
    pub fixpoint_iterations: usize,
    pub states_examined: usize,
    pub stage_counts: Vec<PositionStages>,
    pub image_sizes: Vec<usize>,
    pub unwind_used: Option<usize>,
    pub unwound_failure_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub detector: String,
    pub path: String,
    pub verdict: Verdict,
    pub failure_index: Option<usize>,
    pub failure_state: Option<String>,
    pub dead: Vec<String>,
    pub bad: Vec<String>,
    pub isolated: Vec<String>,
    #[serde(rename = "in")]
    pub in_set: Vec<String>,
    #[serde(rename = "out")]
    pub out_set: Vec<String>,
    pub weights: Vec<WeightDoc>,
    pub visit_order: Vec<usize>,
    pub checked: Vec<Option<bool>>,
    pub stats: StatsDoc,
}

fn names(model: &KripkeStructure, set: Option<&BTreeSet<StateIdx>>) -> Vec<String> {
    set.map(|s| s.iter().map(|&x| model.id(x).to_string()).collect())
        .unwrap_or_default()
}

impl ReportDoc {
    pub fn new(
        report: &SpuriousReport,
        model: &KripkeStructure,
        map: &AbstractionMap,
        ce: &Counterexample,
        timing: bool,
    ) -> Self {
        let partition = report.partition.as_ref();
        let in_out = report.in_out.as_ref();
        let s = &report.stats;
        ReportDoc {
            detector: report.detector.to_string(),
            path: ce.to_path(map).to_string(),
            verdict: report.verdict,
            failure_index: report.failure_index,
            failure_state: report.failure_state.map(|c| map.name(c).to_string()),
            dead: names(model, partition.map(|p| &p.dead)),
            bad: names(model, partition.map(|p| &p.bad)),
            isolated: names(model, partition.map(|p| &p.isolated)),
            in_set: names(model, in_out.map(|io| &io.in_set)),
            out_set: names(model, in_out.map(|io| &io.out_set)),
            weights: report
                .weights
                .iter()
                .zip(ce.states())
                .enumerate()
                .map(|(position, (w, &c))| WeightDoc {
                    position,
                    state: map.name(c).to_string(),
                    e_in: w.e_in,
                    e_out: w.e_out,
                    weight: w.weight,
                })
                .collect(),
            visit_order: report.visit_order.clone(),
            checked: report.checked.clone(),
            stats: StatsDoc {
                sequence_length: s.sequence_length,
                positions_examined: s.positions_examined,
                fixpoint_iterations: s.fixpoint_iterations,
                states_examined: s.states_examined,
                stage_counts: s.stage_counts.clone(),
                image_sizes: s.image_sizes.clone(),
                unwind_used: s.unwind_used,
                unwound_failure_index: s.unwound_failure_index,
                elapsed_us: timing.then_some(s.elapsed.as_micros() as u64),
            },
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "path:      {}", self.path);
        let _ = writeln!(out, "detector:  {}", self.detector);
        match (self.verdict, self.failure_index, &self.failure_state) {
            (Verdict::Spurious, Some(i), Some(state)) => {
                let _ = writeln!(
                    out,
                    "verdict:   spurious (failure state {state} at position {i})"
                );
                if !self.in_set.is_empty() || !self.out_set.is_empty() {
                    let _ = writeln!(out, "in:        {{{}}}", self.in_set.join(", "));
                    let _ = writeln!(out, "out:       {{{}}}", self.out_set.join(", "));
                }
                let _ = writeln!(out, "dead:      {{{}}}", self.dead.join(", "));
                let _ = writeln!(out, "bad:       {{{}}}", self.bad.join(", "));
                let _ = writeln!(out, "isolated:  {{{}}}", self.isolated.join(", "));
            }
            _ => {
                let _ = writeln!(out, "verdict:   {}", self.verdict);
            }
        }
        let weights: Vec<String> = self.weights.iter().map(|w| w.weight.to_string()).collect();
        let _ = writeln!(out, "weights:   [{}]", weights.join(", "));
        let _ = write!(
            out,
            "examined:  {} of {} positions, {} fixpoint rounds",
            self.stats.positions_examined,
            self.stats.sequence_length,
            self.stats.fixpoint_iterations
        );
        if let Some(u) = self.stats.unwind_used {
            let _ = write!(out, ", unwind {u}");
        }
        if let Some(us) = self.stats.elapsed_us {
            let _ = write!(out, ", {us} us");
        }
        out.push('\n');
        out
    }
}
