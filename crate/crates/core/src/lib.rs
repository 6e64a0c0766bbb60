//! Temporal knowledge base completion with box embeddings.
//!
//! A query `(s, r, ?o, t*)` is answered by projecting the subject into a
//! relation box and one time box per known timestamp, intersecting them, and
//! ranking entities by their distance to the resulting box. The crate covers
//! dataset handling, the model, exact gradients, training, and the link and
//! time prediction evaluation protocols.

pub mod data;
pub mod error;
pub mod eval;
pub mod grad;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
