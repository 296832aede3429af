//! File formats, target parsing, compile pipelines and demo scenarios
//! behind the `narrownet` binary. Everything here is std-side plumbing;
//! the numerics live in the core crate.

pub mod demos;
pub mod format;
pub mod parse;
pub mod pipeline;
