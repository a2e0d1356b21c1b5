//! Fractional maximal operators, their commutators and variable-exponent
//! Lebesgue norms on lattice discretisations of stratified groups.

pub mod error;
pub mod exponents;
pub mod grid;
pub mod group;
pub mod lipschitz;
pub mod maximal;
pub mod norms;

pub use error::{Error, Result};
pub use grid::{Ball, BallFamily, GridFunction, LatticeDomain, RadiusLadder};
pub use group::{GroupModel, GroupPoint};
