//! Exact learning of ELH terminologies that are query-inseparable from a hidden
//! target over a fixed ABox, with the reasoner, simulated teachers, batch and PAC
//! variants.

pub mod batch;
pub mod error;
pub mod gen;
pub mod reasoner;
pub mod syntax;
pub mod learner;
pub mod pac;
pub mod teacher;
pub mod updates;

pub use error::{Error, Result};
