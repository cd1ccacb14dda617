#![allow(dead_code)]

use cegar_core::abstraction::AbstractModel;
use cegar_core::gen::{gen_random_model, GenParams, GROUP_VAR};
use cegar_core::{
    build_abstract_model, make_abstraction, model_check, parse_model, AbstractionMap, CheckOutcome,
    ClassIdx, Counterexample, KripkeStructure,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model: KripkeStructure,
    pub map: AbstractionMap,
    pub abstract_model: AbstractModel,
    pub domain: usize,
}

pub fn instance(params: &GenParams) -> Instance {
    let g = gen_random_model(params).unwrap();
    let model = parse_model(&g.text).unwrap();
    let map = make_abstraction(&model, &g.invisible).unwrap();
    let abstract_model = build_abstract_model(&model, &map);
    Instance {
        model,
        map,
        abstract_model,
        domain: params.domain_size,
    }
}

pub fn params() -> impl Strategy<Value = GenParams> {
    (
        2usize..=30,
        2usize..=3,
        2usize..=4,
        0.02f64..0.25,
        any::<u64>(),
    )
        .prop_map(
            |(num_states, num_vars, domain_size, edge_density, seed)| GenParams {
                num_states,
                num_vars,
                domain_size,
                edge_density,
                invisible_fraction: 1.0,
                seed,
            },
        )
}

/// Counterexamples the checker emits for `AG !(g=v)` and `GF g=v`.
pub fn checker_paths(inst: &Instance) -> Vec<Counterexample> {
    let mut out = Vec::new();
    for v in 0..inst.domain {
        for prop in [
            format!("AG !({GROUP_VAR}={v})"),
            format!("GF {GROUP_VAR}={v}"),
        ] {
            if let Ok(CheckOutcome::Violated(ce)) =
                model_check(&inst.abstract_model, &prop.parse().unwrap())
            {
                out.push(ce);
            }
        }
    }
    out
}

/// Random walks on the abstract model: finite paths of up to `max_len`
/// states and, when the walk revisits a class, the lasso closing there.
pub fn random_paths(
    inst: &Instance,
    seed: u64,
    count: usize,
    max_len: usize,
) -> Vec<Counterexample> {
    let m = &inst.abstract_model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..count {
        let init = m.initial();
        let mut walk: Vec<ClassIdx> = vec![init[rng.random_range(0..init.len())]];
        let len = rng.random_range(1..=max_len);
        while walk.len() < len {
            let succ = m.successors(*walk.last().unwrap());
            if succ.is_empty() {
                break;
            }
            walk.push(succ[rng.random_range(0..succ.len())]);
        }
        let last = *walk.last().unwrap();
        let loops: Vec<usize> = (0..walk.len())
            .filter(|&i| m.has_transition(last, walk[i]))
            .collect();
        if !loops.is_empty() && rng.random_bool(0.5) {
            let start = loops[rng.random_range(0..loops.len())];
            out.push(Counterexample::lasso(walk, start).unwrap());
        } else {
            out.push(Counterexample::finite(walk).unwrap());
        }
    }
    out
}
