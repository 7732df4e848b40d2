//! Rate-compatible polar codes: encoding, construction, puncturing,
//! rate matching, SC decoding and a HARQ simulator.

pub mod channel;
pub mod config;
pub mod construction;
pub mod decoder;
pub mod error;
pub mod harq;
pub mod polar;
pub mod puncturing;
pub mod rate_matching;
pub mod rng;

pub use error::{Error, Result};
