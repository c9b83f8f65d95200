//! Bilinear matrix-multiplication schemes: exact verification, addition
//! counting and reduction, and recursive execution.
//!
//! A scheme of rank `R` for `⟨n, m, p⟩` multiplies an `n×m` matrix `A` by an
//! `m×p` matrix `B` with `R` products of linear forms. Entries are numbered
//! row-major (`A_{m·i + j}`), so a `3×3` operand is `A_0 .. A_8`.
//!
//! ```
//! use mmscheme::{builtins, naive_addition_count, slp_addition_count, verify_scheme};
//!
//! let scheme = builtins::stapleton59_naive();
//! assert!(verify_scheme(&scheme).is_valid());
//! assert_eq!(naive_addition_count(&scheme).adds_total, 110);
//! assert_eq!(slp_addition_count(&builtins::stapleton59_slp()).adds_total, 59);
//! ```

pub mod builtins;
pub mod coeff;
pub mod engine;
pub mod io;
pub mod reduce;
pub mod scheme;
pub mod slp;
pub mod verify;

pub use coeff::Coefficient;
pub use io::{emit_slp, parse_scheme, parse_slp, serialize_scheme};
pub use reduce::{
    greedy_cse, rebalance_negations, reduce_scheme, ReductionConfig, ReductionReport,
};
pub use scheme::{
    matmul_tensor, naive_addition_count, BilinearScheme, Dims, MatMulTensor, OpCountReport,
};
pub use slp::{scheme_to_naive_slp, slp_addition_count, Instr, StraightLineProgram, Var};
pub use verify::{
    extract_scheme, random_check, verify_scheme, verify_slp, CheckTarget, RandomCheckOutcome,
    Verdict, VerificationReport,
};
