pub mod capacity;
pub mod channels;
pub mod error;
pub mod kernel;
pub mod localtherm;
pub mod monotones;
pub mod quantum;
pub mod resources;
pub mod thermo;
pub mod tolerance;

pub use error::{Error, Result};
