//! Library side of the `d2dsim` binary: configuration layering and CSV
//! report formatting, exposed so integration tests can drive them directly.

pub mod config;
pub mod report;
