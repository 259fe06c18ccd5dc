//! Batch front end for `qecfid`: TOML experiment configs in, CSV tables and
//! SVG plots out.

pub mod config;
pub mod runner;
pub mod svg;
pub mod table;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("bound violation: {0}")]
    Bound(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Bound(_) => 3,
        }
    }
}
