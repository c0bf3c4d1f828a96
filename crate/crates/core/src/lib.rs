pub mod amplitude;
pub mod doubled;
pub mod error;
pub mod graded;
pub mod krein;
pub mod library;
pub mod linalg;
pub mod measurement;
pub mod positive;
pub mod report;
pub mod spacetime;
pub mod suite;
pub mod theory;

pub use error::{GbfError, Result};
