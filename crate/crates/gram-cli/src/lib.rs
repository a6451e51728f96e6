//! Library surface of the experiment runner, exposed for integration tests.

pub mod artifacts;
pub mod config;
pub mod plot;
pub mod runner;
