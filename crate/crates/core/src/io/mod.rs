//! Readers and writers for the coefficient file and the program text format.

pub mod scheme_file;
pub mod slp_text;

pub use scheme_file::{
    infer_dims, normalize_whitespace, parse_scheme, serialize_scheme, FormatError,
    SchemeFileDocument,
};
pub use slp_text::{emit_slp, emit_slp_with_diagnostics, parse_slp, EmitDiagnostic, SlpTextError};
