//! Numerics for two-dimensional exterior Oseen flow: fundamental solutions,
//! representation formulas, and the data-dependent wake asymptotics of the
//! vorticity, together with a verification suite that turns every bound and
//! identity used along the way into a numerical check.

pub mod asymptotics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod oracle;
pub mod quad;
pub mod specfun;

pub mod verify;

pub use error::{Error, Result};
