//! Configuration-driven front end for the `conformable-kepler` library.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_actions, cmd_simulate, cmd_verify, CampaignResult};
pub use config::{Mode, RunConfig};
pub use error::{CliError, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
