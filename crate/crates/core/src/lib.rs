pub mod diffusion;
pub mod error;
pub mod local_time;
pub mod maps;
pub mod moments;
pub mod path;
pub mod quad;
pub mod stratonovich;
pub mod strong;

pub use error::{Error, Result};
