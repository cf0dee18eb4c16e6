//! Entanglement-structure certificates for continuous-variable states from
//! quantum Fisher information, on a truncated Fock space.

pub mod error;
pub mod fock;
pub mod observables;
pub mod partitions;
pub mod witness;
pub mod criteria;
pub mod stategen;
pub mod harness;

pub use error::{Error, Result};
