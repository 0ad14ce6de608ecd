//! Polaritons in a one-dimensional atom array coupled to a waveguide.
//!
//! Units: lattice spacing d = 1, ħ = 1, rates in a reference rate Γ_ref.
//! Momenta are in radians per site.
//!
//! * [`kinematics`]: dispersion, group velocities and degenerate partners.
//! * [`boundary`]: photon to polariton conversion at the chain end.
//! * [`scattering`]: two-polariton elastic and inelastic amplitudes.
//! * [`oracle`]: finite-chain brute force used to check all of the above.

#[macro_use]
mod par;

pub mod boundary;
pub mod error;
pub mod kinematics;
pub mod oracle;
pub mod scattering;

pub use error::{PolaritonError, Result};
pub use num_complex::Complex64;

/// True when the crate was built with the rayon backend.
pub const PARALLEL: bool = cfg!(feature = "parallel");

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
