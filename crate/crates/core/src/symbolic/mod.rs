//! Exact rational polynomial algebra in `(k or x, β, 1/n)`.
//!
//! Identities between moment objects are decided here by comparing
//! canonical forms, so a passing check means the residual is the zero
//! polynomial rather than a small float.

mod exp_poly;
mod poly;

pub use exp_poly::ExpPoly;
pub use poly::{rat, ExactPoly, Monomial};
