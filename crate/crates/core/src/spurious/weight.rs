use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractionMap, ClassIdx};
use crate::model::KripkeStructure;

/// Edges crossing into and out of a fiber; `weight = e_in * e_out` estimates
/// how many paths pass through the abstract state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StateWeight {
    pub e_in: usize,
    pub e_out: usize,
    pub weight: usize,
}

pub fn state_weight(model: &KripkeStructure, map: &AbstractionMap, class: ClassIdx) -> StateWeight {
    let mut e_in = 0;
    let mut e_out = 0;
    for &s in map.h_inverse(class) {
        e_in += model
            .predecessors(s)
            .iter()
            .filter(|&&p| map.h(p) != class)
            .count();
        e_out += model
            .successors(s)
            .iter()
            .filter(|&&t| map.h(t) != class)
            .count();
    }
    StateWeight {
        e_in,
        e_out,
        weight: e_in * e_out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::make_abstraction;
    use crate::fixtures;
    use crate::model::parse_model;

    #[test]
    fn f12_c_weight() {
        let k = fixtures::f12();
        let map = make_abstraction(&k, &["slot"]).unwrap();
        let w = state_weight(&k, &map, map.resolve("group=c").unwrap());
        assert_eq!(
            w,
            StateWeight {
                e_in: 2,
                e_out: 2,
                weight: 4
            }
        );
    }

    #[test]
    fn traffic_light_go_weight() {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let w = state_weight(&k, &map, map.resolve("state=go").unwrap());
        assert_eq!(
            w,
            StateWeight {
                e_in: 1,
                e_out: 1,
                weight: 1
            }
        );
    }

    #[test]
    fn isolated_fiber_weighs_nothing() {
        let k =
            parse_model("var g : a b\nstate x g=a\nstate y g=b\ninit x\ntrans x x\ntrans y y\n")
                .unwrap();
        let map = make_abstraction::<&str>(&k, &[]).unwrap();
        assert_eq!(state_weight(&k, &map, ClassIdx(0)).weight, 0);
        assert_eq!(state_weight(&k, &map, ClassIdx(1)), StateWeight::default());
    }
}
