//! Server, store and command-line front end for AutoMCQ quiz generation.

pub mod cli;
pub mod config;
pub mod gateway;
pub mod quiz_file;
pub mod service;
pub mod store;
