pub mod classify;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod process;
pub mod recovery;
pub mod scenarios;
pub mod selftest;
pub mod squashed;
pub mod tensor;

pub use error::{Error, Result};
