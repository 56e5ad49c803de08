//! Numerical laboratory for quantum state verification and quantum data
//! hiding under restricted measurement classes.

pub mod error;
pub mod qmath;
pub mod states;
pub mod optim;
pub mod measclass;
pub mod io;
pub mod strategies;
pub mod quantities;
pub mod hiding;
pub mod protocol;
pub mod cli;
