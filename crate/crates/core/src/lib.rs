//! Distributed learning of minimal equilibria in Tug-of-War games.

pub mod error;
pub mod game;
pub mod harness;
pub mod learner;
pub mod oracle;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
