//! Invariants of photonic states under passive linear optics.
pub mod bounds;
pub mod catalog;
pub mod error;
pub mod fock;
pub mod invariants;
pub mod lie;
pub mod linalg;
pub mod report;

pub use error::{Error, Result};
