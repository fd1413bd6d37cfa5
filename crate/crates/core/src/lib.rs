pub mod error;
pub mod exec;
pub mod multiindex;
pub mod numeric;
pub mod scalarseq;
pub mod shift;
pub mod truncation;
pub mod classify;
pub mod schatten;
pub mod spectra;
pub mod report;
pub mod cli;
pub mod verdict;

pub use error::{Error, Result};
