//! File formats and command-line front end for [`rlcn_core`].

pub mod cli;
pub mod formats;
pub mod spec_file;
