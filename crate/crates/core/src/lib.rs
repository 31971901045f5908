//! Prediction intervals for the number of additional events an event-driven
//! trial with closed accrual will observe by a future horizon.

pub mod bootstrap;
pub mod commands;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod io;
pub mod probability;
pub mod rng;
pub mod sim;
pub mod numeric;
pub mod poibin;
pub mod survival;

pub use error::{Error, Result};
