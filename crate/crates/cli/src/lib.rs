//! Sweeps, checks and reports behind the `mfrg` command.
//!
//! Each experiment reads a [`RunConfig`], computes its rows (in parallel
//! where it pays), and returns a [`Table`] whose row order depends only on
//! the configuration.

pub mod experiments;
pub mod plot;
pub mod settings;
pub mod table;

pub use settings::{Kind, Overrides, RunConfig};
pub use table::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mfrg_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) violated with preconditions met")]
    Violations(usize),
}

impl CliError {
    /// Process exit status: 1 usage or config, 2 verify violation, 3 resource limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violations(_) => 2,
            CliError::Core(mfrg_core::Error::ResourceLimit(_)) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
