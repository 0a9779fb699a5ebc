pub mod carleman;
pub mod cli;
pub mod coeffs;
pub mod error;
pub mod experiment;
pub mod fractional;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod solver;
pub mod symbol;

pub use error::{Error, Result};
