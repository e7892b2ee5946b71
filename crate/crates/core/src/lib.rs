//! Numerical core for checking quasi-symmetry of steady magnetic fields.
//!
//! Fields and symmetry candidates are closed-form models evaluated with exact
//! derivative jets. On top of them sit Lie-derivative residuals, guiding-centre
//! dynamics, flux-surface diagnostics, equilibrium identities and a reduced
//! Grad-Shafranov solver. Everything here is `no_std` + `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diffgeo;
pub mod dual;
pub mod equilibrium;
pub mod error;
pub mod expr;
pub mod fields;
pub mod fluxsurf;
pub mod gcmotion;
pub mod gs;
pub mod linalg;
pub mod ode;
pub mod quad;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
