//! File formats, sweeps and the command line around `cntsim-core`.

pub mod checkpoint;
pub mod config;
mod error;
pub mod export;
pub mod record;
pub mod spec;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
