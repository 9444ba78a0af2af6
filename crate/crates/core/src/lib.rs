//! Variational quantum simulation of the lattice Schwinger model on a
//! trapped-ion analog simulator.

pub mod ansatz;
pub mod optimizer;
pub mod ed;
pub mod error;
pub mod measurement;
pub mod operator;
pub mod pauli;
pub mod qse;
pub mod runner;
pub mod schwinger;
pub mod sector;
pub mod simulator;

pub use error::{Result, VqsError};
