//! Configuration, initial data, artifacts and the subcommands behind the CLI.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod initial;
pub mod snapshot;
pub mod verify;

pub use config::RunConfig;
pub use experiment::{execute, ExecuteOptions, Outcome};
pub use initial::{InitialDataSpec, Shape};
pub use verify::{verify_snapshots, Status, VerifyReport};
