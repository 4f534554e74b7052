//! Command-line front end: configuration, logging, batch runs and fixtures.

pub mod batch;
pub mod commands;
pub mod config;
pub mod fixtures;
pub mod logging;
