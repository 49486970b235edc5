//! Config parsing, CSV output and command implementations behind the
//! `safetyrace` binary.

pub mod config;
pub mod run;
pub mod table;

pub use config::{Config, Overrides};
pub use run::{Exit, Options};
