//! Counterexample-guided abstraction refinement for explicit-state models.
//!
//! A [`KripkeStructure`] is abstracted by hiding variables
//! ([`make_abstraction`], [`build_abstract_model`]), checked against `AG φ` or
//! `GF φ` ([`checker`]), and abstract counterexamples are tested for
//! spuriousness with the In/Out failure-state detectors in [`spurious`] or
//! the exact [`oracle`]. Failure fibers are split by [`refine`], and
//! [`cegar`] drives the whole loop.

pub mod abstraction;
pub mod bench;
pub mod cegar;
pub mod checker;
pub mod counterexample;
pub mod fixtures;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod path_format;
pub mod refine;
pub mod spurious;

pub use abstraction::{
    build_abstract_model, make_abstraction, AbstractModel, AbstractionMap, ClassIdx,
};
pub use cegar::{cegar, CegarOptions, CegarOutcome, CegarResult, DetectorChoice};
pub use checker::{model_check, CheckOutcome, Property};
pub use counterexample::{CfpView, Counterexample, PathKind};
pub use model::{parse_model, KripkeStructure, ModelError, StateIdx};
pub use path_format::PathText;
pub use refine::{refine, RefinementStep};
pub use spurious::{LastStateMode, Partition, SpuriousReport, Verdict};
