//! Library surface of the command-line front end, shared with the
//! acceptance suite.

pub mod commands;
pub mod config;
