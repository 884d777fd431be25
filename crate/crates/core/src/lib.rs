//! Massless Dirac-Weyl fermions in a localized perpendicular magnetic flux.
//!
//! Units are ħ = e = v_F = 1 throughout. The crate is split into
//!
//! - [`field`]: magnetic-field profiles and their total flux,
//! - [`potential`]: the auxiliary potential λ with ∇²λ = B, the divergenceless
//!   gauge A = (−∂_yλ, ∂_xλ), and checks of its logarithmic asymptote,
//! - [`symcalc`]: exact term algebra for zero modes, the D± ladder, and the
//!   large-r tail analysis that decides square integrability,
//! - [`numlab`]: a lattice discretization of the Dirac-Weyl operator used as an
//!   independent numerical oracle (commutator, residuals, sparse spectra).
//!
//! Grid-wide loops run on rayon when the `parallel` feature is enabled (the
//! default) and sequentially otherwise. Every reduction uses a fixed summation
//! order, so results do not depend on the number of worker threads.

pub mod error;
pub mod field;
pub mod grid;
pub mod numlab;
pub mod par;
pub mod poisson;
pub mod potential;
pub mod symcalc;

pub use error::{Error, Result};
pub use field::{FieldKind, FieldProfile, FluxInfo};
pub use grid::{ComplexGrid, GridSpec, RealGrid};
pub use num_complex::Complex64;
