pub mod archpotential;
pub mod dynsys;
pub mod error;
pub mod exactnum;
pub mod heights;
pub mod orbits;
pub mod padicmodel;
pub mod sampling;
pub mod stochheight;
pub mod suite;

pub use error::{Error, Result};
