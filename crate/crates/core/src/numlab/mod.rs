//! Lattice Dirac operator, sparse assembly, interior spectrum and quadrature
//! checks on symbolic states.

pub mod eigen;
pub mod norms;
pub mod operator;
pub mod sparse;
pub mod spinor;

pub use eigen::{spectrum, Cluster, Eigenpair, Region, SpectrumReport, SpectrumRequest};
pub use norms::{geometric_radii, truncated_norms, Growth, NormOptions, NormSeries};
pub use operator::DiracOperator;
pub use sparse::{assemble, CsrMatrix, DEFAULT_SITE_CAP};
pub use spinor::GridSpinor;
