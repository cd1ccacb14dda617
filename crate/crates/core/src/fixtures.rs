//! Small reference models used by the tests, the CLI, and the Python bindings.

use crate::model::{parse_model, KripkeStructure};

/// Traffic light controller: a stop/go light cycling red → green → yellow.
pub const TRAFFIC_LIGHT: &str = "\
# traffic light controller
var state : stop go
var color : red green yellow
state red state=stop color=red
state green state=go color=green
state yellow state=go color=yellow
init red
trans red green
trans green yellow
trans yellow red
";

/// Twelve states in four groups of three. Hiding `slot` yields the groups
/// {1,2,3}, {4,5,6}, {7,8,9}, {10,11,12} as abstract states a, b, c, d.
pub const F12: &str = "\
# twelve states, four groups
var group : a b c d
var slot : 1 2 3
state 1 group=a slot=1
state 2 group=a slot=2
state 3 group=a slot=3
state 4 group=b slot=1
state 5 group=b slot=2
state 6 group=b slot=3
state 7 group=c slot=1
state 8 group=c slot=2
state 9 group=c slot=3
state 10 group=d slot=1
state 11 group=d slot=2
state 12 group=d slot=3
init 1
init 2
trans 1 4
trans 2 5
trans 3 6
trans 4 9
trans 5 9
trans 7 10
trans 7 11
trans 8 9
trans 10 12
trans 11 12
trans 12 12
";

pub fn traffic_light() -> KripkeStructure {
    parse_model(TRAFFIC_LIGHT).expect("traffic light fixture parses")
}

pub fn f12() -> KripkeStructure {
    parse_model(F12).expect("F12 fixture parses")
}
