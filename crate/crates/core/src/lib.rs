pub mod analysis;
pub mod corrections;
pub mod error;
pub mod measurement;
pub mod protocols;
pub mod qutrit;
pub mod verify;

pub use error::{Error, Result};
