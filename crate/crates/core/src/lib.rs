//! Load flow and EV charging strategy simulation for unbalanced four-wire
//! low-voltage radial feeders.

pub mod charging;
pub mod data;
pub mod error;
pub mod grid;
pub mod load;
pub mod metrics;
pub mod powerflow;
pub mod scenario;
pub mod time;

pub use error::{Error, Result};
