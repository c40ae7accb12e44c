//! Small reference task sets with known blocking behaviour. The same files
//! live under `crates/core/fixtures/` for use with the command-line tool.

use crate::taskset::{parse_taskset, TaskSet};

/// Four jobs, three-level nesting; transitive inheritance lets `J4` block `J1`.
pub const TS_A: &str = include_str!("../fixtures/ts_a.pip");
/// Six jobs without nesting; every assignment bound is exact.
pub const TS_B: &str = include_str!("../fixtures/ts_b.pip");
/// Four jobs without nesting; the bound for `J1` is not attainable.
pub const TS_C: &str = include_str!("../fixtures/ts_c.pip");
/// Six jobs with nesting; the nested bound for `J2` is attainable.
pub const TS_D: &str = include_str!("../fixtures/ts_d.pip");
/// Three jobs where the quick admissibility check misses an exact bound.
pub const TS_E: &str = include_str!("../fixtures/ts_e.pip");
/// Five jobs, five resources; bound 33 against an exact blocking time of 26.
pub const TS_F: &str = include_str!("../fixtures/ts_f.pip");
/// Two jobs nesting `R1` and `R2` in opposite orders.
pub const CROSS: &str = include_str!("../fixtures/cross.pip");

fn load(text: &str) -> TaskSet {
    parse_taskset(text).expect("bundled fixture parses")
}

pub fn ts_a() -> TaskSet {
    load(TS_A)
}

pub fn ts_b() -> TaskSet {
    load(TS_B)
}

pub fn ts_c() -> TaskSet {
    load(TS_C)
}

pub fn ts_d() -> TaskSet {
    load(TS_D)
}

pub fn ts_e() -> TaskSet {
    load(TS_E)
}

pub fn ts_f() -> TaskSet {
    load(TS_F)
}

pub fn cross() -> TaskSet {
    load(CROSS)
}

/// Every bundled fixture with its short name.
pub fn all() -> Vec<(&'static str, TaskSet)> {
    vec![
        ("ts_a", ts_a()),
        ("ts_b", ts_b()),
        ("ts_c", ts_c()),
        ("ts_d", ts_d()),
        ("ts_e", ts_e()),
        ("ts_f", ts_f()),
        ("cross", cross()),
    ]
}
