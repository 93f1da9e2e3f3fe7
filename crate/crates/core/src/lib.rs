#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classify;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod models;
pub mod mps;
pub mod random;
pub mod rg;

pub use error::{Error, Result};
