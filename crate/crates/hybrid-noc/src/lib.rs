//! Design-space exploration and cycle-level simulation for hybrid opto-electronic
//! networks-on-chip.

pub mod analysis;
pub mod calib;
pub mod cli;
pub mod error;
pub mod optproj;
pub mod routing;
pub mod simcore;
pub mod techlib;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
