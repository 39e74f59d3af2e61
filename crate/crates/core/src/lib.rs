pub mod baselines;
pub mod error;
pub mod estimation;
pub mod io;
pub mod linalg;
pub mod manifest;
pub mod model;
pub mod rng;
pub mod simulation;
pub mod spow;
pub mod stability;

pub use error::{Error, Result};
