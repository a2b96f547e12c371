pub mod blocking;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod numerics;
pub mod rng;
pub mod shock;
pub mod stats;

pub use error::{Error, Result};
