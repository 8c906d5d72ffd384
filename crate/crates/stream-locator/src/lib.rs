//! File formats, subprocess scorers, corpus pipelines and the command line
//! for the stream locator.

pub mod cli;
pub mod embedding_file;
pub mod error;
pub mod external;
pub mod files;
pub mod formats;
pub mod pipeline;
pub mod plots;
pub mod stub;

pub use error::{Error, Result};
