//! File formats, scenario handling, sweeps and the command-line driver
//! around [`iqdist_core`].

pub mod cli;
pub mod error;
pub mod matrix;
pub mod report;
pub mod scenario;
pub mod sweep;
pub mod waveform_io;

pub use error::{CliError, Result};
