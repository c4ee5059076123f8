pub mod channels;
pub mod cli;
pub mod error;
mod linalg;
pub mod measurements;
pub mod states;
pub mod symmetry;
pub mod tensor;
pub mod verification;

pub use error::{Error, Result};
