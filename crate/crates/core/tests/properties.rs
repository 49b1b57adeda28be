mod common;

use common::{check, CASES};

#[test]
fn count_bounds() {
    check(common::count_bounds(CASES));
}

#[test]
fn codec_roundtrip() {
    check(common::codec_roundtrip(CASES));
}

#[test]
fn delta_merge_composition() {
    check(common::delta_merge_composition(CASES));
}

#[test]
fn frame_fuzzing() {
    check(common::frame_fuzzing(CASES));
}

#[test]
fn determinism() {
    check(common::determinism(CASES));
}
