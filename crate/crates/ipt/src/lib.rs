//! Matrix Market IO, JSON reports, scan renderings, the benchmark harness and
//! the command-line front end for [`ipt_core`].

pub mod bench;
pub mod cli;
mod error;
pub mod family;
pub mod float;
pub mod mm;
pub mod report;
pub mod scan;

pub use error::{Error, Result};
