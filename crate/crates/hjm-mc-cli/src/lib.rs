//! Configuration, result tables and command implementations behind the
//! `hjmmc` binary, exposed as a library so integration tests can drive the
//! same code paths directly.

// Validation guards are written `!(x > 0.0)` so NaN fails them too, and the
// sweep loops index cell arrays from offset starting positions.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod table;
