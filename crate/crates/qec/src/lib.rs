//! Surface-code memory on the RHG lattice with GKP displacement noise.

pub mod error;
pub mod inner;
pub mod lattice;
pub mod matching;
pub mod memory;
pub mod noise;
pub mod rate;
pub mod sweep;
pub mod threshold;

pub use error::{QecError, Result};
