//! HTTP API, command-line interface and renderers on top of `propscan-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod render;
