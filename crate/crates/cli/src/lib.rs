//! Library half of the `pir` command-line tool: the scheme file format and
//! the command implementations.

pub mod commands;
pub mod file;

pub use file::{parse_records, FileError, SchemeFile};
