//! Command-level simulator of a DRAM rank with in-DRAM copy, bitwise and
//! gather/scatter extensions, plus a last-level cache with a Dirty-Block
//! Index.

pub mod array;
pub mod bench;
pub mod bits;
pub mod buddy;
pub mod cache;
pub mod command;
pub mod config;
pub mod error;
pub mod gsdram;
pub mod rank;
pub mod rowclone;
pub mod system;

pub use error::{Error, Result};
