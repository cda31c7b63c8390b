//! Shared fixtures for the benchmarks.

use scalent::systems::{sample_invariant, EmpiricalSample, SystemSpec};

pub fn rotation_sample(m: usize) -> EmpiricalSample {
    sample_invariant(&SystemSpec::golden_rotation(), m, 42).expect("sample")
}

pub fn pascal_sample(m: usize) -> EmpiricalSample {
    sample_invariant(&SystemSpec::pascal(0.5, 64), m, 42).expect("sample")
}
