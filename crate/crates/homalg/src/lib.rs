//! Exact homological algebra over `Z`, `Z/n` and `F_p`.

pub mod cli;
pub mod complex;
pub mod cotorsion;
pub mod error;
pub mod kaplansky;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod module;
pub mod report;
pub mod quiver;
pub mod ring;
pub mod sample;

pub use error::{Error, Result};
