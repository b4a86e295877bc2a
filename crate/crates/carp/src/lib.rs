//! Command-line and HTTP front ends for `carp-core`.

pub mod advice;
pub mod cli;
pub mod model;
pub mod server;
