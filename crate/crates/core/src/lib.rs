//! Numerical tools for quantum channel capacities, additivity witnesses and
//! potential-capacity bounds.

pub mod additivity;
pub mod capacities;
pub mod channels;
pub mod cli;
pub mod entanglement;
pub mod entropics;
pub mod error;
pub mod linops;
pub mod optim;
pub mod potential;
pub mod structure;

pub use error::{Error, Result};
