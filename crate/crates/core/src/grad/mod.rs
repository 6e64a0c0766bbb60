//! Reverse-mode differentiation of the training loss, and a finite
//! difference checker for it.

mod check;
pub mod graph;
mod tape;

pub use check::{finite_diff_check, relative_error, FdOptions, FdReport, FdSample};
pub use tape::{GradientMap, NodeId, Tape};
