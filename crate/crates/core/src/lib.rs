//! Born–Infeld electrostatics of a proton–electron pair.
//!
//! - [`fields`]: constitutive law, single-charge potential, Coulomb-approximation
//!   field and its line integrals.
//! - [`minimizer`]: variational solve of the two-charge problem on an axisymmetric grid.
//! - [`extraction`]: interaction potential `V_β(r)` from either of the above.
//! - [`schrodinger`]: hydrogen levels in that potential and their shifts.

pub mod error;
pub mod extraction;
pub mod fields;
pub mod minimizer;
pub mod quadrature;
pub mod schrodinger;

pub use error::{Error, Result};
pub use fields::{DipoleConfig, Vec3};
