//! Continuous Hessenberg reduction of matrix fields sampled on simplicial meshes.

pub mod avoidance;
pub mod domain;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod operators;
pub mod projections;
pub mod reduction;
pub mod spectra;

pub use error::{Error, Result};
