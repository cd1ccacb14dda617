//! Python bindings: `pycegar.Model`, `pycegar.Abstraction` and a few
//! module-level entry points. Reports are returned as JSON strings in the same
//! schema the CLI emits.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cegar_core::bench::{bench_compare, BenchConfig, BenchDetector};
use cegar_core::cegar::{cegar as run_cegar, CegarOptions, DetectorChoice};
use cegar_core::gen::{gen_random_model, GenParams};
use cegar_core::oracle::concretize;
use cegar_core::spurious::report::ReportDoc;
use cegar_core::{
    build_abstract_model, fixtures, make_abstraction, model_check, parse_model, AbstractionMap,
    CheckOutcome, ClassIdx, Counterexample, KripkeStructure, LastStateMode, PathText, Property,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn last_mode(strict: bool) -> LastStateMode {
    if strict {
        LastStateMode::Strict
    } else {
        LastStateMode::Unconstrained
    }
}

#[pyclass(frozen, module = "pycegar")]
struct Model {
    inner: Arc<KripkeStructure>,
}

#[pymethods]
impl Model {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: Arc::new(parse_model(text).map_err(err)?),
        })
    }

    /// `"traffic_light"` or `"f12"`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = match name {
            "traffic_light" | "tl" => fixtures::traffic_light(),
            "f12" => fixtures::f12(),
            other => return Err(err(format!("unknown fixture `{other}`"))),
        };
        Ok(Model {
            inner: Arc::new(inner),
        })
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_transitions(&self) -> usize {
        self.inner.num_transitions()
    }

    fn state_ids(&self) -> Vec<String> {
        self.inner.states().iter().map(|s| s.id.clone()).collect()
    }

    fn initial(&self) -> Vec<String> {
        self.inner
            .initial()
            .iter()
            .map(|&s| self.inner.id(s).to_string())
            .collect()
    }

    fn deadlocks(&self) -> Vec<String> {
        self.inner
            .deadlocks()
            .iter()
            .map(|&s| self.inner.id(s).to_string())
            .collect()
    }

    fn successors(&self, id: &str) -> PyResult<Vec<String>> {
        let succ = self.inner.successors_of(id).map_err(err)?;
        Ok(succ.into_iter().map(str::to_string).collect())
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    #[pyo3(signature = (invisible = Vec::new()))]
    fn abstraction(&self, invisible: Vec<String>) -> PyResult<Abstraction> {
        let map = make_abstraction(&self.inner, &invisible).map_err(err)?;
        Ok(Abstraction {
            model: Arc::clone(&self.inner),
            map,
        })
    }

    /// Runs the refinement loop and returns the result document as JSON.
    #[pyo3(signature = (invisible, prop, detector = "first", max_iterations = 100, strict_last_state = false))]
    fn cegar(
        &self,
        invisible: Vec<String>,
        prop: &str,
        detector: &str,
        max_iterations: usize,
        strict_last_state: bool,
    ) -> PyResult<String> {
        let property: Property = prop.parse().map_err(err)?;
        let detector = match detector {
            "first" => DetectorChoice::First,
            "heaviest" => DetectorChoice::Heaviest,
            "splitpath" => DetectorChoice::SplitPath { unwind: None },
            "oracle" => DetectorChoice::Oracle,
            other => return Err(err(format!("unknown detector `{other}`"))),
        };
        let options = CegarOptions {
            detector,
            workers: None,
            last_mode: last_mode(strict_last_state),
            max_iterations,
        };
        let result = run_cegar(&self.inner, &invisible, &property, &options, false).map_err(err)?;
        serde_json::to_string(&result).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(states={}, transitions={})",
            self.inner.num_states(),
            self.inner.num_transitions()
        )
    }
}

#[pyclass(frozen, module = "pycegar")]
struct Abstraction {
    model: Arc<KripkeStructure>,
    map: AbstractionMap,
}

impl Abstraction {
    fn counterexample(&self, path: &str) -> PyResult<Counterexample> {
        let text: PathText = path.parse().map_err(err)?;
        let ce = Counterexample::from_path(&text, &self.map).map_err(err)?;
        ce.validate(&build_abstract_model(&self.model, &self.map))
            .map_err(err)?;
        Ok(ce)
    }
}

#[pymethods]
impl Abstraction {
    fn classes(&self) -> Vec<String> {
        self.map.classes().iter().map(|c| c.name.clone()).collect()
    }

    fn h(&self, state: &str) -> PyResult<String> {
        let s = self.model.index_of(state).map_err(err)?;
        Ok(self.map.name(self.map.h(s)).to_string())
    }

    fn h_inverse(&self, class: &str) -> PyResult<Vec<String>> {
        let fiber = self.map.h_inverse_of(class).map_err(err)?;
        Ok(fiber
            .iter()
            .map(|&s| self.model.id(s).to_string())
            .collect())
    }

    fn successors(&self, class: &str) -> PyResult<Vec<String>> {
        let c = self.map.resolve(class).map_err(err)?;
        let m = build_abstract_model(&self.model, &self.map);
        Ok(m.successors(c)
            .iter()
            .map(|&t| self.map.name(t).to_string())
            .collect())
    }

    fn initial(&self) -> Vec<String> {
        let m = build_abstract_model(&self.model, &self.map);
        m.initial()
            .iter()
            .map(|&c: &ClassIdx| self.map.name(c).to_string())
            .collect()
    }

    fn render(&self) -> String {
        build_abstract_model(&self.model, &self.map).render()
    }

    /// Returns the counterexample path, or `None` when the property holds.
    fn model_check(&self, prop: &str) -> PyResult<Option<String>> {
        let property: Property = prop.parse().map_err(err)?;
        let m = build_abstract_model(&self.model, &self.map);
        Ok(match model_check(&m, &property).map_err(err)? {
            CheckOutcome::Verified => None,
            CheckOutcome::Violated(ce) => Some(ce.to_path(&self.map).to_string()),
        })
    }

    /// Runs a detector (`first`, `heaviest`, `par-first:N`, `par-heaviest:N`,
    /// `splitpath[:N]`, `oracle`) and returns the report as JSON.
    #[pyo3(signature = (path, detector = "first", strict_last_state = false))]
    fn analyze(&self, path: &str, detector: &str, strict_last_state: bool) -> PyResult<String> {
        let detector: BenchDetector = detector.parse().map_err(err)?;
        let ce = self.counterexample(path)?;
        let report = detector.run(&self.model, &self.map, &ce, last_mode(strict_last_state));
        let doc = ReportDoc::new(&report, &self.model, &self.map, &ce, false);
        serde_json::to_string(&doc).map_err(err)
    }

    /// Concrete witness path, or `None` when the counterexample is spurious.
    fn concretize(&self, path: &str) -> PyResult<Option<String>> {
        let ce = self.counterexample(path)?;
        Ok(concretize(&self.model, &self.map, &ce).map(|w| w.to_path(&self.model).to_string()))
    }

    fn __len__(&self) -> usize {
        self.map.num_classes()
    }
}

/// Returns `(model_text, invisible_variables)`.
#[pyfunction]
#[pyo3(signature = (states = 12, vars = 2, domain = 4, density = 0.1, invisible_fraction = 1.0, seed = 0))]
fn gen_model(
    states: usize,
    vars: usize,
    domain: usize,
    density: f64,
    invisible_fraction: f64,
    seed: u64,
) -> PyResult<(String, Vec<String>)> {
    let params = GenParams {
        num_states: states,
        num_vars: vars,
        domain_size: domain,
        edge_density: density,
        invisible_fraction,
        seed,
    };
    let g = gen_random_model(&params).map_err(err)?;
    Ok((g.text, g.invisible))
}

/// Runs the detector comparison and returns the report as JSON.
#[pyfunction]
#[pyo3(name = "bench", signature = (models = 20, detectors = vec!["first".to_string(), "splitpath".to_string()], seed = 0))]
fn run_bench(models: usize, detectors: Vec<String>, seed: u64) -> PyResult<String> {
    let detectors = detectors
        .iter()
        .map(|d| d.parse::<BenchDetector>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let config = BenchConfig {
        models,
        detectors,
        seed,
        ..Default::default()
    };
    serde_json::to_string(&bench_compare(&config)).map_err(err)
}

#[pymodule]
fn pycegar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Abstraction>()?;
    m.add_function(wrap_pyfunction!(gen_model, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
