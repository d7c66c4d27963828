//! Multiple-scattering coefficients of an infinite grating of insulating
//! dielectric circular cylinders under an obliquely incident, E-polarized
//! plane wave.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`]: Bessel/Hankel functions of integer order and Bernoulli numbers.
//! * [`medium`]: wavenumbers and polarization coupling constants.
//! * [`isolated`]: single-cylinder scattering constants `c_n`, `a_n`, `b_n`.
//! * [`lattice`]: oblique-incidence Schlömilch series `I_n(k_r d)` and their
//!   small-spacing leading terms `h_n`.
//! * [`solver`]: the truncated coupled system for `A_n`, `A_n^H` (direct and
//!   Neumann iteration).
//! * [`asymptotic`]: closed-form long-wavelength coefficients through `|n| = 3`.
//! * [`fields`]: exterior `E_z`, `H_z` synthesis.

pub mod asymptotic;
pub mod error;
pub mod fields;
pub mod isolated;
pub mod lattice;
pub mod linalg;
pub mod medium;
pub mod solver;
pub mod special;

pub use error::{GratingError, Result};
pub use medium::{DerivedWavenumbers, GratingConfig, PolarizationConstants, UnitsMode};
