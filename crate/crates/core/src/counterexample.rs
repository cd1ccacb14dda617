//! Abstract counterexamples and their complete finite prefix (CFP).

use thiserror::Error;

use crate::abstraction::{AbstractModel, AbstractionError, AbstractionMap, ClassIdx};
use crate::path_format::PathText;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterexampleError {
    #[error("counterexample has no states")]
    Empty,
    #[error("loop start {loop_start} is outside a path of length {len}")]
    LoopStartOutOfRange { loop_start: usize, len: usize },
    #[error("abstract state {0} is out of range")]
    UnknownState(usize),
    #[error("first state `{0}` is not an abstract initial state")]
    NotInitial(String),
    #[error("no abstract transition at position {position} (`{from}` -> `{to}`)")]
    MissingTransition {
        position: usize,
        from: String,
        to: String,
    },
    #[error("no loop-back transition `{from}` -> `{to}`")]
    MissingLoopBack { from: String, to: String },
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Finite,
    Lasso,
}

/// A finite path `ŝ0..ŝn` or a lasso `ŝ0..(ŝi..ŝn)^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    states: Vec<ClassIdx>,
    loop_start: Option<usize>,
}

impl Counterexample {
    pub fn finite(states: Vec<ClassIdx>) -> Result<Self, CounterexampleError> {
        if states.is_empty() {
            return Err(CounterexampleError::Empty);
        }
        Ok(Self {
            states,
            loop_start: None,
        })
    }

    pub fn lasso(states: Vec<ClassIdx>, loop_start: usize) -> Result<Self, CounterexampleError> {
        if states.is_empty() {
            return Err(CounterexampleError::Empty);
        }
        if loop_start >= states.len() {
            return Err(CounterexampleError::LoopStartOutOfRange {
                loop_start,
                len: states.len(),
            });
        }
        Ok(Self {
            states,
            loop_start: Some(loop_start),
        })
    }

    pub fn kind(&self) -> PathKind {
        match self.loop_start {
            Some(_) => PathKind::Lasso,
            None => PathKind::Finite,
        }
    }

    pub fn states(&self) -> &[ClassIdx] {
        &self.states
    }

    pub fn loop_start(&self) -> Option<usize> {
        self.loop_start
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Checks the path against the abstract model: initial start, consecutive
    /// abstract transitions, and the loop-back edge for lassos.
    pub fn validate(&self, model: &AbstractModel) -> Result<(), CounterexampleError> {
        if let Some(c) = self.states.iter().find(|c| c.0 >= model.num_states()) {
            return Err(CounterexampleError::UnknownState(c.0));
        }
        let first = self.states[0];
        if !model.is_initial(first) {
            return Err(CounterexampleError::NotInitial(
                model.name(first).to_string(),
            ));
        }
        for (k, pair) in self.states.windows(2).enumerate() {
            if !model.has_transition(pair[0], pair[1]) {
                return Err(CounterexampleError::MissingTransition {
                    position: k,
                    from: model.name(pair[0]).to_string(),
                    to: model.name(pair[1]).to_string(),
                });
            }
        }
        if let Some(i) = self.loop_start {
            let last = *self.states.last().expect("nonempty");
            if !model.has_transition(last, self.states[i]) {
                return Err(CounterexampleError::MissingLoopBack {
                    from: model.name(last).to_string(),
                    to: model.name(self.states[i]).to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn cfp(&self) -> CfpView {
        CfpView {
            states: self.states.clone(),
            loop_start: self.loop_start,
            successor_of_last: self.loop_start.map(|i| self.states[i]),
        }
    }

    pub fn from_path(path: &PathText, map: &AbstractionMap) -> Result<Self, CounterexampleError> {
        let states = path
            .items
            .iter()
            .map(|id| map.resolve(id))
            .collect::<Result<Vec<_>, _>>()?;
        match path.loop_start {
            Some(i) => Self::lasso(states, i),
            None => Self::finite(states),
        }
    }

    pub fn to_path(&self, map: &AbstractionMap) -> PathText {
        PathText {
            items: self
                .states
                .iter()
                .map(|&c| map.name(c).to_string())
                .collect(),
            loop_start: self.loop_start,
        }
    }

    /// The prefix followed by `unwind` extra copies of the loop. Finite paths
    /// are returned unchanged.
    pub fn unwound(&self, unwind: usize) -> Vec<ClassIdx> {
        let mut seq = self.states.clone();
        if let Some(i) = self.loop_start {
            for _ in 0..unwind {
                seq.extend_from_slice(&self.states[i..]);
            }
        }
        seq
    }
}

/// The complete finite prefix `ŝ0..ŝj` of a counterexample. For a lasso the
/// successor of the last position is the loop start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfpView {
    pub states: Vec<ClassIdx>,
    pub loop_start: Option<usize>,
    pub successor_of_last: Option<ClassIdx>,
}

impl CfpView {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> usize {
        self.states.len() - 1
    }

    pub fn predecessor(&self, i: usize) -> Option<ClassIdx> {
        i.checked_sub(1).map(|p| self.states[p])
    }

    pub fn successor(&self, i: usize) -> Option<ClassIdx> {
        if i + 1 < self.states.len() {
            Some(self.states[i + 1])
        } else {
            self.successor_of_last
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{build_abstract_model, make_abstraction};
    use crate::fixtures;

    #[test]
    fn traffic_light_lasso_is_valid() {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let m = build_abstract_model(&k, &map);
        let ce =
            Counterexample::from_path(&"lasso: state=stop ( state=go )".parse().unwrap(), &map)
                .unwrap();
        ce.validate(&m).unwrap();
        let cfp = ce.cfp();
        assert_eq!(cfp.states, ce.states());
        assert_eq!(
            cfp.successor_of_last,
            Some(map.resolve("state=go").unwrap())
        );
        assert_eq!(
            ce.to_path(&map).to_string(),
            "lasso: state=stop ( state=go )"
        );
    }

    #[test]
    fn single_initial_state_is_valid() {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let m = build_abstract_model(&k, &map);
        let ce = Counterexample::finite(vec![ClassIdx(0)]).unwrap();
        ce.validate(&m).unwrap();
        let cfp = ce.cfp();
        assert_eq!(cfp.successor_of_last, None);
        assert_eq!(cfp.states, ce.states());
    }

    #[test]
    fn lasso_from_zero_loops_to_first() {
        let ce = Counterexample::lasso(vec![ClassIdx(0), ClassIdx(1), ClassIdx(2)], 0).unwrap();
        assert_eq!(ce.cfp().successor_of_last, Some(ClassIdx(0)));
        assert_eq!(ce.cfp().cfp_states_again(), ce.states());
    }

    #[test]
    fn f12_gap_is_reported() {
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let m = build_abstract_model(&k, &map);
        let ce =
            Counterexample::from_path(&"finite: group=a group=d".parse().unwrap(), &map).unwrap();
        let err = ce.validate(&m).unwrap_err();
        assert!(matches!(
            err,
            CounterexampleError::MissingTransition { position: 0, .. }
        ));
        assert!(err
            .to_string()
            .contains("no abstract transition at position 0"));
    }

    #[test]
    fn other_validation_errors() {
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let m = build_abstract_model(&k, &map);
        let not_init = Counterexample::finite(vec![ClassIdx(1)]).unwrap();
        assert!(matches!(
            not_init.validate(&m),
            Err(CounterexampleError::NotInitial(_))
        ));
        let no_back = Counterexample::lasso(vec![ClassIdx(0), ClassIdx(1)], 0).unwrap();
        assert!(matches!(
            no_back.validate(&m),
            Err(CounterexampleError::MissingLoopBack { .. })
        ));
        assert!(Counterexample::lasso(vec![ClassIdx(0)], 1).is_err());
        assert_eq!(
            Counterexample::finite(vec![]),
            Err(CounterexampleError::Empty)
        );
    }

    #[test]
    fn unwinding_repeats_the_loop() {
        let ce = Counterexample::lasso(vec![ClassIdx(0), ClassIdx(1)], 1).unwrap();
        assert_eq!(
            ce.unwound(2),
            vec![ClassIdx(0), ClassIdx(1), ClassIdx(1), ClassIdx(1)]
        );
        let fin = Counterexample::finite(vec![ClassIdx(0)]).unwrap();
        assert_eq!(fin.unwound(5), vec![ClassIdx(0)]);
    }

    impl CfpView {
        fn cfp_states_again(&self) -> Vec<ClassIdx> {
            Counterexample {
                states: self.states.clone(),
                loop_start: self.loop_start,
            }
            .cfp()
            .states
        }
    }
}
