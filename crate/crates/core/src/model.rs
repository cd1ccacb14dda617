//! Explicit-state Kripke structures and the line-based model file format.
//!
//! ```text
//! # comment
//! var <name> : <val> <val> ...
//! state <id> <name>=<val> ...
//! init <id>
//! trans <id> <id>
//! ```
//!
//! Directives may appear in any order; every error carries the line it came from.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

/// Index of a concrete state in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIdx(pub usize);

impl StateIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Vec<String>,
}

impl VarDecl {
    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }
}

/// A concrete state. The valuation holds one domain index per declared variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteState {
    pub id: String,
    pub valuation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),
    #[error("empty domain for variable `{0}`")]
    EmptyDomain(String),
    #[error("duplicate value `{value}` in domain of `{var}`")]
    DuplicateValue { var: String, value: String },
    #[error("undeclared variable `{0}`")]
    UndeclaredVar(String),
    #[error("value `{value}` is not in the domain of `{var}`")]
    UndeclaredValue { var: String, value: String },
    #[error("variable `{0}` assigned more than once")]
    DuplicateAssignment(String),
    #[error("variable `{0}` is not assigned")]
    MissingAssignment(String),
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("unknown state id `{0}`")]
    UnknownState(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("model declares no initial state")]
    MissingInit,
    #[error("unknown state id `{0}`")]
    UnknownState(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl ModelError {
    fn at(line: usize, kind: ParseErrorKind) -> Self {
        ModelError::Parse { line, kind }
    }
}

/// The concrete model `K = (S, I, R)`; the label of a state is its valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    vars: Vec<VarDecl>,
    states: Vec<ConcreteState>,
    ids: HashMap<String, StateIdx>,
    initial: Vec<StateIdx>,
    is_initial: Vec<bool>,
    succ: Vec<Vec<StateIdx>>,
    pred: Vec<Vec<StateIdx>>,
    deadlocks: Vec<StateIdx>,
}

impl KripkeStructure {
    /// Assembles a structure from already-resolved parts.
    pub fn from_parts(
        vars: Vec<VarDecl>,
        states: Vec<ConcreteState>,
        initial: impl IntoIterator<Item = StateIdx>,
        transitions: impl IntoIterator<Item = (StateIdx, StateIdx)>,
    ) -> Result<Self, ModelError> {
        let n = states.len();
        let mut ids = HashMap::with_capacity(n);
        for (i, st) in states.iter().enumerate() {
            if st.valuation.len() != vars.len() {
                return Err(ModelError::Invalid(format!(
                    "state `{}` assigns {} of {} variables",
                    st.id,
                    st.valuation.len(),
                    vars.len()
                )));
            }
            for (var, &v) in vars.iter().zip(&st.valuation) {
                if v >= var.domain.len() {
                    return Err(ModelError::Invalid(format!(
                        "state `{}` has out-of-domain value for `{}`",
                        st.id, var.name
                    )));
                }
            }
            if ids.insert(st.id.clone(), StateIdx(i)).is_some() {
                return Err(ModelError::Invalid(format!(
                    "duplicate state id `{}`",
                    st.id
                )));
            }
        }

        let initial: BTreeSet<StateIdx> = initial.into_iter().collect();
        if initial.is_empty() {
            return Err(ModelError::MissingInit);
        }
        let mut is_initial = vec![false; n];
        for s in &initial {
            if s.0 >= n {
                return Err(ModelError::Invalid(format!(
                    "initial index {} out of range",
                    s.0
                )));
            }
            is_initial[s.0] = true;
        }

        let mut edges: BTreeSet<(StateIdx, StateIdx)> = BTreeSet::new();
        for (a, b) in transitions {
            if a.0 >= n || b.0 >= n {
                return Err(ModelError::Invalid(format!(
                    "transition ({}, {}) out of range",
                    a.0, b.0
                )));
            }
            edges.insert((a, b));
        }
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(a, b) in &edges {
            succ[a.0].push(b);
            pred[b.0].push(a);
        }
        for p in &mut pred {
            p.sort_unstable();
        }
        let deadlocks = (0..n)
            .filter(|&i| succ[i].is_empty())
            .map(StateIdx)
            .collect();

        Ok(Self {
            vars,
            states,
            ids,
            initial: initial.into_iter().collect(),
            is_initial,
            succ,
            pred,
            deadlocks,
        })
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[ConcreteState] {
        &self.states
    }

    pub fn state(&self, s: StateIdx) -> &ConcreteState {
        &self.states[s.0]
    }

    pub fn id(&self, s: StateIdx) -> &str {
        &self.states[s.0].id
    }

    pub fn index_of(&self, id: &str) -> Result<StateIdx, ModelError> {
        self.ids
            .get(id)
            .copied()
            .ok_or_else(|| ModelError::UnknownState(id.to_string()))
    }

    /// Value of `var` (by index) in state `s`, as its domain name.
    pub fn value(&self, s: StateIdx, var: usize) -> &str {
        &self.vars[var].domain[self.states[s.0].valuation[var]]
    }

    pub fn initial(&self) -> &[StateIdx] {
        &self.initial
    }

    pub fn is_initial(&self, s: StateIdx) -> bool {
        self.is_initial[s.0]
    }

    /// Sorted successor list of `s`.
    pub fn successors(&self, s: StateIdx) -> &[StateIdx] {
        &self.succ[s.0]
    }

    /// Sorted predecessor list of `s`.
    pub fn predecessors(&self, s: StateIdx) -> &[StateIdx] {
        &self.pred[s.0]
    }

    /// Successor ids of the state named `id`.
    pub fn successors_of(&self, id: &str) -> Result<Vec<&str>, ModelError> {
        let s = self.index_of(id)?;
        Ok(self.succ[s.0].iter().map(|&t| self.id(t)).collect())
    }

    /// The set F of states without successors.
    pub fn deadlocks(&self) -> &[StateIdx] {
        &self.deadlocks
    }

    pub fn is_deadlock(&self, s: StateIdx) -> bool {
        self.succ[s.0].is_empty()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// All transitions, ordered by (source, target) index.
    pub fn transitions(&self) -> impl Iterator<Item = (StateIdx, StateIdx)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (StateIdx(i), t)))
    }

    /// Same states and initial set with a different transition relation.
    pub fn with_transitions(
        &self,
        transitions: impl IntoIterator<Item = (StateIdx, StateIdx)>,
    ) -> Result<Self, ModelError> {
        Self::from_parts(
            self.vars.clone(),
            self.states.clone(),
            self.initial.iter().copied(),
            transitions,
        )
    }

    /// Re-checks every structural invariant, including that the stored F matches
    /// a recomputation from the transition relation.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.states.len();
        if self.initial.is_empty() {
            return Err(ModelError::MissingInit);
        }
        let mut names = BTreeSet::new();
        for v in &self.vars {
            if !names.insert(&v.name) {
                return Err(ModelError::Invalid(format!(
                    "duplicate variable `{}`",
                    v.name
                )));
            }
            let vals: BTreeSet<_> = v.domain.iter().collect();
            if v.domain.is_empty() || vals.len() != v.domain.len() {
                return Err(ModelError::Invalid(format!("bad domain for `{}`", v.name)));
            }
        }
        for (a, b) in self.transitions() {
            if a.0 >= n || b.0 >= n {
                return Err(ModelError::Invalid("dangling transition".into()));
            }
            if self.pred[b.0].binary_search(&a).is_err() {
                return Err(ModelError::Invalid("predecessor index out of sync".into()));
            }
        }
        let recomputed: Vec<StateIdx> = (0..n)
            .filter(|&i| self.succ[i].is_empty())
            .map(StateIdx)
            .collect();
        if recomputed != self.deadlocks {
            return Err(ModelError::Invalid("deadlock set out of sync".into()));
        }
        Ok(())
    }

    /// Emits the model in the model file format; `parse_model` inverts it.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.vars {
            let _ = writeln!(out, "var {} : {}", v.name, v.domain.join(" "));
        }
        for st in &self.states {
            out.push_str("state ");
            out.push_str(&st.id);
            for (var, &val) in self.vars.iter().zip(&st.valuation) {
                let _ = write!(out, " {}={}", var.name, var.domain[val]);
            }
            out.push('\n');
        }
        for &s in &self.initial {
            let _ = writeln!(out, "init {}", self.id(s));
        }
        for (a, b) in self.transitions() {
            let _ = writeln!(out, "trans {} {}", self.id(a), self.id(b));
        }
        out
    }
}

impl fmt::Display for KripkeStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Line<'a> {
    number: usize,
    directive: &'a str,
    rest: &'a str,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<KripkeStructure, ModelError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (directive, rest) = match body.find(char::is_whitespace) {
            Some(pos) => (&body[..pos], body[pos..].trim_start()),
            None => (body, ""),
        };
        match directive {
            "var" | "state" | "init" | "trans" => {}
            other => {
                return Err(ModelError::at(
                    i + 1,
                    ParseErrorKind::UnknownDirective(other.to_string()),
                ))
            }
        }
        lines.push(Line {
            number: i + 1,
            directive,
            rest,
        });
    }

    let mut vars: Vec<VarDecl> = Vec::new();
    for line in lines.iter().filter(|l| l.directive == "var") {
        let Some((name, values)) = line.rest.split_once(':') else {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::Malformed("expected `var <name> : <values>`".into()),
            ));
        };
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::Malformed(format!("bad variable name `{name}`")),
            ));
        }
        if vars.iter().any(|v| v.name == name) {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::DuplicateVar(name.into()),
            ));
        }
        let mut domain: Vec<String> = Vec::new();
        for value in values.split_whitespace() {
            if domain.iter().any(|d| d == value) {
                return Err(ModelError::at(
                    line.number,
                    ParseErrorKind::DuplicateValue {
                        var: name.into(),
                        value: value.into(),
                    },
                ));
            }
            domain.push(value.to_string());
        }
        if domain.is_empty() {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::EmptyDomain(name.into()),
            ));
        }
        vars.push(VarDecl {
            name: name.to_string(),
            domain,
        });
    }

    let mut states: Vec<ConcreteState> = Vec::new();
    let mut ids: HashMap<&str, StateIdx> = HashMap::new();
    for line in lines.iter().filter(|l| l.directive == "state") {
        let mut tokens = line.rest.split_whitespace();
        let Some(id) = tokens.next() else {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::Malformed("expected `state <id> <name>=<value> ...`".into()),
            ));
        };
        if ids.contains_key(id) {
            return Err(ModelError::at(
                line.number,
                ParseErrorKind::DuplicateState(id.into()),
            ));
        }
        let mut valuation: Vec<Option<usize>> = vec![None; vars.len()];
        for token in tokens {
            let Some((name, value)) = token.split_once('=') else {
                return Err(ModelError::at(
                    line.number,
                    ParseErrorKind::Malformed(format!(
                        "expected `<name>=<value>`, found `{token}`"
                    )),
                ));
            };
            let Some(vi) = vars.iter().position(|v| v.name == name) else {
                return Err(ModelError::at(
                    line.number,
                    ParseErrorKind::UndeclaredVar(name.into()),
                ));
            };
            let Some(val) = vars[vi].value_index(value) else {
                return Err(ModelError::at(
                    line.number,
                    ParseErrorKind::UndeclaredValue {
                        var: name.into(),
                        value: value.into(),
                    },
                ));
            };
            if valuation[vi].replace(val).is_some() {
                return Err(ModelError::at(
                    line.number,
                    ParseErrorKind::DuplicateAssignment(name.into()),
                ));
            }
        }
        let mut resolved = Vec::with_capacity(vars.len());
        for (vi, v) in valuation.into_iter().enumerate() {
            match v {
                Some(v) => resolved.push(v),
                None => {
                    return Err(ModelError::at(
                        line.number,
                        ParseErrorKind::MissingAssignment(vars[vi].name.clone()),
                    ))
                }
            }
        }
        ids.insert(id, StateIdx(states.len()));
        states.push(ConcreteState {
            id: id.to_string(),
            valuation: resolved,
        });
    }

    let lookup = |line: &Line<'_>, id: &str| -> Result<StateIdx, ModelError> {
        ids.get(id)
            .copied()
            .ok_or_else(|| ModelError::at(line.number, ParseErrorKind::UnknownState(id.into())))
    };

    let mut initial = Vec::new();
    let mut transitions = Vec::new();
    for line in &lines {
        let tokens: Vec<&str> = line.rest.split_whitespace().collect();
        match line.directive {
            "init" => {
                if tokens.is_empty() {
                    return Err(ModelError::at(
                        line.number,
                        ParseErrorKind::Malformed("expected `init <id>`".into()),
                    ));
                }
                for id in tokens {
                    initial.push(lookup(line, id)?);
                }
            }
            "trans" => {
                let [from, to] = tokens[..] else {
                    return Err(ModelError::at(
                        line.number,
                        ParseErrorKind::Malformed("expected `trans <id> <id>`".into()),
                    ));
                };
                transitions.push((lookup(line, from)?, lookup(line, to)?));
            }
            _ => {}
        }
    }
    if initial.is_empty() {
        return Err(ModelError::MissingInit);
    }

    KripkeStructure::from_parts(vars, states, initial, transitions)
}
