//! Seeded random model generator.
//!
//! Variable `g` is the group variable and always stays visible; `v1..` are
//! the remaining variables, a share of which is marked invisible so that the
//! fibers are the `g`-classes refined by the visible `v`s.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GROUP_VAR: &str = "g";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub num_states: usize,
    /// Number of variables including the group variable.
    pub num_vars: usize,
    pub domain_size: usize,
    pub edge_density: f64,
    pub invisible_fraction: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            num_states: 12,
            num_vars: 2,
            domain_size: 4,
            edge_density: 0.1,
            invisible_fraction: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedModel {
    pub text: String,
    pub invisible: Vec<String>,
}

impl GenParams {
    fn check(&self) -> Result<(), GenError> {
        let fail = |m: &str| Err(GenError::Infeasible(m.to_string()));
        if self.num_states == 0 {
            return fail("num_states must be at least 1");
        }
        if self.num_vars == 0 {
            return fail("num_vars must be at least 1");
        }
        if self.domain_size == 0 {
            return fail("domain_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return fail("edge_density must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.invisible_fraction) {
            return fail("invisible_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Produces a model document; the output is a pure function of `params`.
pub fn gen_random_model(params: &GenParams) -> Result<GeneratedModel, GenError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let names: Vec<String> = std::iter::once(GROUP_VAR.to_string())
        .chain((1..params.num_vars).map(|k| format!("v{k}")))
        .collect();

    let mut others: Vec<usize> = (1..params.num_vars).collect();
    others.shuffle(&mut rng);
    let hidden = (params.invisible_fraction * others.len() as f64).round() as usize;
    let mut invisible_idx: Vec<usize> = others[..hidden].to_vec();
    invisible_idx.sort_unstable();
    let invisible: Vec<String> = invisible_idx.iter().map(|&k| names[k].clone()).collect();

    let mut text = String::new();
    let _ = writeln!(
        text,
        "# generated: seed={} states={} vars={} domain={} density={} invisible_fraction={}",
        params.seed,
        params.num_states,
        params.num_vars,
        params.domain_size,
        params.edge_density,
        params.invisible_fraction
    );
    let _ = writeln!(text, "# invisible: {}", invisible.join(" "));
    let values: Vec<String> = (0..params.domain_size).map(|v| v.to_string()).collect();
    for name in &names {
        let _ = writeln!(text, "var {name} : {}", values.join(" "));
    }
    for s in 0..params.num_states {
        let _ = write!(text, "state s{s}");
        for name in &names {
            let _ = write!(text, " {name}={}", rng.random_range(0..params.domain_size));
        }
        text.push('\n');
    }
    let _ = writeln!(text, "init s0");
    for s in 1..params.num_states {
        if rng.random_bool(0.05) {
            let _ = writeln!(text, "init s{s}");
        }
    }
    for s in 0..params.num_states {
        for t in 0..params.num_states {
            if rng.random_bool(params.edge_density) {
                let _ = writeln!(text, "trans s{s} s{t}");
            }
        }
    }
    Ok(GeneratedModel { text, invisible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams {
            seed: 1,
            ..Default::default()
        };
        assert_eq!(gen_random_model(&p).unwrap(), gen_random_model(&p).unwrap());
        let q = GenParams {
            seed: 2,
            ..Default::default()
        };
        assert_ne!(
            gen_random_model(&p).unwrap().text,
            gen_random_model(&q).unwrap().text
        );
    }

    #[test]
    fn zero_density_makes_every_state_a_deadlock() {
        let p = GenParams {
            edge_density: 0.0,
            ..Default::default()
        };
        let k = parse_model(&gen_random_model(&p).unwrap().text).unwrap();
        assert_eq!(k.deadlocks().len(), k.num_states());
    }

    #[test]
    fn fifty_states_parse_and_validate() {
        let p = GenParams {
            num_states: 50,
            edge_density: 0.1,
            seed: 7,
            ..Default::default()
        };
        let g = gen_random_model(&p).unwrap();
        let k = parse_model(&g.text).unwrap();
        k.validate().unwrap();
        assert_eq!(k.num_states(), 50);
        assert!(k.is_initial(k.index_of("s0").unwrap()));
        assert_eq!(g.invisible, vec!["v1"]);
    }

    #[test]
    fn infeasible_params_are_rejected() {
        for p in [
            GenParams {
                num_states: 0,
                ..Default::default()
            },
            GenParams {
                num_vars: 0,
                ..Default::default()
            },
            GenParams {
                domain_size: 0,
                ..Default::default()
            },
            GenParams {
                edge_density: 1.5,
                ..Default::default()
            },
            GenParams {
                invisible_fraction: -0.1,
                ..Default::default()
            },
        ] {
            assert!(gen_random_model(&p).is_err());
        }
    }

    #[test]
    fn invisible_fraction_rounds_over_non_group_vars() {
        let p = GenParams {
            num_vars: 5,
            invisible_fraction: 0.5,
            ..Default::default()
        };
        let g = gen_random_model(&p).unwrap();
        assert_eq!(g.invisible.len(), 2);
        assert!(!g.invisible.iter().any(|v| v == GROUP_VAR));
    }
}
