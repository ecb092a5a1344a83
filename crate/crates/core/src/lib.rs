//! Minimizers and asymptotics of the renormalized, radially symmetric
//! von Kármán energy of a regular cone.
//!
//! The crate is organised bottom-up: [`grid`] holds meshes and profiles,
//! [`energy`] the discrete functional with its derivatives and identities,
//! [`minimize`] the descent solver, [`euler_lagrange`] residuals, tail
//! shooting and Newton polish, [`analysis`] the quantitative checks, and
//! [`cli`] the command-line pipelines.

pub mod analysis;
pub mod banded;
pub mod cli;
pub mod energy;
pub mod error;
pub mod euler_lagrange;
pub mod grid;
pub mod minimize;
pub mod numeric;

pub use error::{Error, Result};
