//! Optimal debt-ratio ceiling when inflation follows an Ornstein–Uhlenbeck
//! process: free-boundary solver, value functions and policy simulation.

pub mod boundary;
pub mod cache;
pub mod config;
pub mod error;
pub mod kernel;
pub mod model;
pub mod normal;
pub mod ou;
pub mod policy;
pub mod quadrature;
pub(crate) mod root;
pub mod sampling;
pub mod valuation;
pub mod ystar;

pub use error::{Error, Result};
