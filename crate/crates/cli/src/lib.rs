//! Pipeline commands, configuration and the refinement service behind the
//! `geocell-kit` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod service;
