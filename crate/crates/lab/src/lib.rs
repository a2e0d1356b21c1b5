//! Experiment driver: fixtures, the verification battery, scenarios and
//! report writers.

pub mod battery;
pub mod fixtures;
pub mod io;
pub mod report;
pub mod scenario;
