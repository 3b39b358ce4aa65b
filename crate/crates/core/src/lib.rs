//! Constructive tools for operators with the global comparison property on
//! point grids: Whitney extension of grid functions, discrete calculus,
//! Courrège decompositions, Clarke-differential sampling with min-max
//! representations, and extraction of Lévy-type triples.

pub mod calculus;
pub mod clarke;
pub mod discrete_diff;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod jet;
pub mod levy;
pub mod operators;
pub mod point;
pub mod quadrature;
pub mod stats;
pub mod whitney;

pub use error::{Error, Result};
