pub mod bounds;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
