//! Linearization of noncommutative rational expressions and the
//! distribution of rational functions in free random variables.
//!
//! The pipeline goes expression → formal linear representation →
//! selfadjoint shifted pencil → operator-valued subordination → density
//! (selfadjoint case) or Brown measure (general case).

pub mod algorithms;
pub mod error;
pub mod freeprob;
pub mod io;
pub mod linalg;
pub mod linrep;
pub mod ncexpr;
pub mod realization;
pub mod rmt;

pub use error::{Error, Result};
pub use linalg::{MatC, C64};
