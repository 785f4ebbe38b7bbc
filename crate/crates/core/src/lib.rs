pub mod cli;
pub mod error;
pub mod estimation;
pub mod functionals;
pub mod geometry;
pub mod process;
pub mod rates;
pub mod sprinkling;

pub use error::{Error, Result};
