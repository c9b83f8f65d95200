//! Execution of straight-line programs over concrete scalar rings.

pub mod exec;
pub mod matrix;
pub mod ring;

pub use exec::{
    bench, count_formula, eval_slp, naive_multiply, padded_size, recursive_multiply,
    seeded_operands, BenchConfig, BenchRow, EngineError, MeterCounts, OpMeter, BENCH_HEADER,
};
pub use matrix::BlockMatrix;
pub use ring::{CheckedI64, F64Ring, ModP, RationalRing, RingError, ScalarRing};
