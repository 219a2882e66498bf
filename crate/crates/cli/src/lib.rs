//! Library surface of the CLI crate: the instance file format, shared by
//! the binary and the acceptance suite.

pub mod format;
