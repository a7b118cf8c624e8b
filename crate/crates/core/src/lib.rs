//! Attractive particle systems on a one-dimensional lattice in a quenched
//! random environment.

pub mod cli;
pub mod engine;
pub mod error;
pub mod flux;
pub mod harness;
pub mod io;
pub mod model;
pub mod pde;
pub mod rng;

pub use error::{Error, Result};
