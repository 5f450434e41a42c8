//! Command line and HTTP front ends for the `docsift` library.

pub mod assert;
pub mod cli;
pub mod ops;
pub mod service;
