//! Library side of the CLI: configuration schema, dataset/arm-sample CSV
//! ingestion and emission, command implementations, and output rendering.
//! The `ivsens` binary is a thin argument-parsing shell over this.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
