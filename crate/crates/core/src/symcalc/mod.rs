//! Exact algebra on sums of c·zᵖz̄^q|z|^s(e^λ)^γ with z = ix + y.
//!
//! This covers the zero modes, the D± ladder, the energy recursion and the
//! far-field tail analysis that decides which states are square integrable.

pub mod eval;
pub mod ladder;
pub mod ops;
pub mod tail;
pub mod term;

pub use eval::{evaluate_expr, EvalMode};
pub use ladder::{build_level, ladder_up, zero_mode, FluxBranch, LadderState, LevelEnergy};
pub use ops::{apply_d_minus, apply_d_plus, nabla_hat, nabla_hat_conj, Regime};
pub use tail::{degeneracy_table, normalizability, tail_exponent, DegeneracyReport, DegeneracyRow, TailReport};
pub use term::{SpinorExpr, SymExpr, SymTerm};
