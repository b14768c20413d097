//! HTTP API and command line for the mmsum summarizer.

pub mod api;
pub mod cli;
pub mod store;
