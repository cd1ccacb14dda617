//! Abstraction by hiding variables, and the existential abstract model.
//!
//! An [`AbstractionMap`] starts out as the visible-valuation partition of the
//! concrete states. Refinement may later split a class into several classes
//! that share a signature; those are told apart by a split tag, which shows up
//! in the class id as `#<tag>`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{KripkeStructure, StateIdx, VarDecl};

/// Index of an abstract state within its [`AbstractionMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassIdx(pub usize);

impl ClassIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown abstract state `{0}`")]
    UnknownAbstractState(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractClass {
    /// Domain index of each visible variable, in declaration order.
    pub signature: Vec<usize>,
    pub tag: u32,
    pub name: String,
    /// Origins `h⁻(ŝ)`, sorted.
    pub origins: Vec<StateIdx>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractionMap {
    invisible: BTreeSet<String>,
    visible: Vec<usize>,
    classes: Vec<AbstractClass>,
    class_of: Vec<ClassIdx>,
    last_tag: HashMap<Vec<usize>, u32>,
}

fn signature_name(model: &KripkeStructure, visible: &[usize], signature: &[usize]) -> String {
    if visible.is_empty() {
        return "*".to_string();
    }
    let mut name = String::new();
    for (i, (&var, &val)) in visible.iter().zip(signature).enumerate() {
        if i > 0 {
            name.push(',');
        }
        let decl = &model.vars()[var];
        let _ = write!(name, "{}={}", decl.name, decl.domain[val]);
    }
    name
}

fn class_name(base: &str, tag: u32) -> String {
    if tag == 0 {
        base.to_string()
    } else {
        format!("{base}#{tag}")
    }
}

/// Builds `h` for the given invisible variables. Classes are ordered by the
/// first state (in declaration order) that lands in them.
pub fn make_abstraction<S: AsRef<str>>(
    model: &KripkeStructure,
    invisible: &[S],
) -> Result<AbstractionMap, AbstractionError> {
    let mut hidden = BTreeSet::new();
    for name in invisible {
        let name = name.as_ref();
        if model.var_index(name).is_none() {
            return Err(AbstractionError::UnknownVariable(name.to_string()));
        }
        hidden.insert(name.to_string());
    }
    let visible: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| !hidden.contains(&v.name))
        .map(|(i, _)| i)
        .collect();

    let mut index: HashMap<Vec<usize>, ClassIdx> = HashMap::new();
    let mut classes: Vec<AbstractClass> = Vec::new();
    let mut class_of = Vec::with_capacity(model.num_states());
    for (i, st) in model.states().iter().enumerate() {
        let signature: Vec<usize> = visible.iter().map(|&v| st.valuation[v]).collect();
        let c = *index.entry(signature.clone()).or_insert_with(|| {
            let name = signature_name(model, &visible, &signature);
            classes.push(AbstractClass {
                signature,
                tag: 0,
                name,
                origins: Vec::new(),
            });
            ClassIdx(classes.len() - 1)
        });
        classes[c.0].origins.push(StateIdx(i));
        class_of.push(c);
    }

    Ok(AbstractionMap {
        invisible: hidden,
        visible,
        classes,
        class_of,
        last_tag: HashMap::new(),
    })
}

impl AbstractionMap {
    pub fn invisible(&self) -> impl Iterator<Item = &str> {
        self.invisible.iter().map(String::as_str)
    }

    pub fn is_visible(&self, var: usize) -> bool {
        self.visible.contains(&var)
    }

    /// Indices of the visible variables, in declaration order.
    pub fn visible(&self) -> &[usize] {
        &self.visible
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[AbstractClass] {
        &self.classes
    }

    pub fn class(&self, c: ClassIdx) -> &AbstractClass {
        &self.classes[c.0]
    }

    pub fn name(&self, c: ClassIdx) -> &str {
        &self.classes[c.0].name
    }

    /// `h(s)`.
    #[inline]
    pub fn h(&self, s: StateIdx) -> ClassIdx {
        self.class_of[s.0]
    }

    /// `h⁻(ŝ)`.
    #[inline]
    pub fn h_inverse(&self, c: ClassIdx) -> &[StateIdx] {
        &self.classes[c.0].origins
    }

    pub fn max_fiber_size(&self) -> usize {
        self.classes
            .iter()
            .map(|c| c.origins.len())
            .max()
            .unwrap_or(0)
    }

    /// Resolves an abstract-state id: either the class name (`state=go`,
    /// `group=c#2`, `*`) or a positional alias `a<k>`.
    pub fn resolve(&self, id: &str) -> Result<ClassIdx, AbstractionError> {
        if let Some(pos) = self.classes.iter().position(|c| c.name == id) {
            return Ok(ClassIdx(pos));
        }
        if let Some(k) = id.strip_prefix('a').and_then(|k| k.parse::<usize>().ok()) {
            if k < self.classes.len() {
                return Ok(ClassIdx(k));
            }
        }
        Err(AbstractionError::UnknownAbstractState(id.to_string()))
    }

    pub fn h_inverse_of(&self, id: &str) -> Result<&[StateIdx], AbstractionError> {
        Ok(self.h_inverse(self.resolve(id)?))
    }

    /// Replaces class `c` by one class per nonempty part, in the order given.
    /// Later class indices shift; returns the indices of the new classes.
    pub(crate) fn split_class(&mut self, c: ClassIdx, parts: &[Vec<StateIdx>]) -> Vec<ClassIdx> {
        let old = self.classes.remove(c.0);
        let base = self.classes_base_name(&old);
        let mut fresh = Vec::new();
        for part in parts.iter().filter(|p| !p.is_empty()) {
            let tag = self.last_tag.entry(old.signature.clone()).or_insert(0);
            *tag += 1;
            let mut origins = part.clone();
            origins.sort_unstable();
            fresh.push(AbstractClass {
                signature: old.signature.clone(),
                tag: *tag,
                name: class_name(&base, *tag),
                origins,
            });
        }
        let count = fresh.len();
        self.classes.splice(c.0..c.0, fresh);
        for (k, class) in self.classes.iter().enumerate() {
            for &s in &class.origins {
                self.class_of[s.0] = ClassIdx(k);
            }
        }
        (c.0..c.0 + count).map(ClassIdx).collect()
    }

    fn classes_base_name(&self, class: &AbstractClass) -> String {
        match class.name.rfind('#') {
            Some(pos) if class.tag > 0 => class.name[..pos].to_string(),
            _ => class.name.clone(),
        }
    }
}

/// The existential abstraction `K̂ = (Ŝ, Ŝ0, R̂, L̂)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractModel {
    names: Vec<String>,
    visible_vars: Vec<VarDecl>,
    hidden_vars: Vec<String>,
    labels: Vec<Vec<usize>>,
    initial: Vec<ClassIdx>,
    is_initial: Vec<bool>,
    succ: Vec<Vec<ClassIdx>>,
}

/// Lifts every concrete transition to its classes; a class is initial iff it
/// contains an initial state.
pub fn build_abstract_model(model: &KripkeStructure, map: &AbstractionMap) -> AbstractModel {
    let n = map.num_classes();
    let mut succ: Vec<BTreeSet<ClassIdx>> = vec![BTreeSet::new(); n];
    for (a, b) in model.transitions() {
        succ[map.h(a).0].insert(map.h(b));
    }
    let mut is_initial = vec![false; n];
    for &s in model.initial() {
        is_initial[map.h(s).0] = true;
    }
    let initial = (0..n).filter(|&c| is_initial[c]).map(ClassIdx).collect();
    AbstractModel {
        names: map.classes().iter().map(|c| c.name.clone()).collect(),
        visible_vars: map
            .visible()
            .iter()
            .map(|&v| model.vars()[v].clone())
            .collect(),
        hidden_vars: map.invisible().map(str::to_string).collect(),
        labels: map.classes().iter().map(|c| c.signature.clone()).collect(),
        initial,
        is_initial,
        succ: succ.into_iter().map(|s| s.into_iter().collect()).collect(),
    }
}

impl AbstractModel {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, c: ClassIdx) -> &str {
        &self.names[c.0]
    }

    pub fn initial(&self) -> &[ClassIdx] {
        &self.initial
    }

    pub fn is_initial(&self, c: ClassIdx) -> bool {
        self.is_initial[c.0]
    }

    pub fn successors(&self, c: ClassIdx) -> &[ClassIdx] {
        &self.succ[c.0]
    }

    pub fn has_transition(&self, a: ClassIdx, b: ClassIdx) -> bool {
        self.succ[a.0].binary_search(&b).is_ok()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (ClassIdx, ClassIdx)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (ClassIdx(i), t)))
    }

    pub fn visible_vars(&self) -> &[VarDecl] {
        &self.visible_vars
    }

    pub fn hidden_vars(&self) -> &[String] {
        &self.hidden_vars
    }

    /// Domain index of each visible variable at `c`.
    pub fn label(&self, c: ClassIdx) -> &[usize] {
        &self.labels[c.0]
    }

    /// Dumps the abstract model in the model file format. States get the
    /// synthesized ids `a0, a1, ...`; a comment line maps them to class names.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "# a{k} = {name}");
        }
        for v in &self.visible_vars {
            let _ = writeln!(out, "var {} : {}", v.name, v.domain.join(" "));
        }
        for (k, label) in self.labels.iter().enumerate() {
            let _ = write!(out, "state a{k}");
            for (v, &val) in self.visible_vars.iter().zip(label) {
                let _ = write!(out, " {}={}", v.name, v.domain[val]);
            }
            out.push('\n');
        }
        for c in &self.initial {
            let _ = writeln!(out, "init a{}", c.0);
        }
        for (a, b) in self.transitions() {
            let _ = writeln!(out, "trans a{} a{}", a.0, b.0);
        }
        out
    }
}
