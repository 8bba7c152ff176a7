pub mod breeding;
pub mod catfit;
pub mod error;
pub mod exec;
pub mod fock;
pub mod measurement;
pub mod seed;
pub mod teleport;
pub mod units;

pub use error::{Error, Result};
