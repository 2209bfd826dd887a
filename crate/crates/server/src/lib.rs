//! HTTP API and command-line driver for the event graph pipeline.

pub mod api;
pub mod cli;
pub mod config;
