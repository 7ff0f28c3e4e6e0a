//! Simulation and design of dynamical-decoupling pulse sequences for
//! dipolar spin-1/2 chains.

extern crate blas_src;
extern crate openblas_src;

pub mod aht;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod policy;
pub mod quantum;
pub mod sequence;

pub use error::{Error, Result};
