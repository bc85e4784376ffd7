//! Generalized Appell systems at finite dimension and truncation degree.

pub mod alpha;
pub mod appell;
pub mod combin;
pub mod config;
pub mod error;
pub mod format;
pub mod jets;
pub mod measures;
pub mod oracle;
pub mod random;
pub mod remeasure;
pub mod suites;
pub mod symtensor;
pub mod wick;

pub use error::{Error, Result};
pub use symtensor::{HilbertScale, SymTensor};
