//! Exact and numerical tools for Jain-basis operators and their
//! Phillips-type integral modification.

pub mod basis;
pub mod error;
pub mod identity_lab;
pub mod moments;
pub mod numerics;
pub mod operators;
pub mod symbolic;

pub use error::{Error, Result};
