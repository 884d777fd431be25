//! ∇̂ = −i∂_x − ∂_y, ∇̌ = −i∂_x + ∂_y and the covariant D± on the term family.
//!
//! With z = ix + y:
//!
//! | | z^p | z̄^q | \|z\|^s |
//! |---|---|---|---|
//! | ∇̂ | 0 | −2q·z̄^{q−1} | −s·z·\|z\|^{s−2} |
//! | ∇̌ | 2p·z^{p−1} | 0 | s·z̄·\|z\|^{s−2} |
//!
//! D₋ = ∇̂ + (∇̂λ) = e^{−λ}∇̂e^{λ} and D₊ = ∇̌ − (∇̌λ) = e^{λ}∇̌e^{−λ}, so
//! that [D₊, D₋] = −2∇²λ = −2B.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::term::{SymExpr, SymTerm};
use crate::error::{Error, Result};

/// How λ enters the term algebra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Far field: λ = (Φ/2π)·ln|z|, with e^λ already folded into |z|.
    Asymptotic { phi_over_2pi: f64 },
    /// λ = B·|z|²/4 everywhere, e^λ kept as a symbolic factor.
    UniformField { b: f64 },
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn require_folded(expr: &SymExpr) -> Result<()> {
    if expr.has_exp_factors() {
        Err(Error::NotAsymptotic)
    } else {
        Ok(())
    }
}

fn nabla_hat_terms(t: &SymTerm, out: &mut Vec<SymTerm>) {
    if t.q > 0 {
        out.push(SymTerm { coeff: t.coeff * re(-2.0 * t.q as f64), q: t.q - 1, ..*t });
    }
    if t.s != 0.0 {
        out.push(SymTerm { coeff: t.coeff * re(-t.s), p: t.p + 1, s: t.s - 2.0, ..*t });
    }
}

fn nabla_check_terms(t: &SymTerm, out: &mut Vec<SymTerm>) {
    if t.p > 0 {
        out.push(SymTerm { coeff: t.coeff * re(2.0 * t.p as f64), p: t.p - 1, ..*t });
    }
    if t.s != 0.0 {
        out.push(SymTerm { coeff: t.coeff * re(t.s), q: t.q + 1, s: t.s - 2.0, ..*t });
    }
}

/// ∇̂ on an expression without e^λ factors.
pub fn nabla_hat(expr: &SymExpr) -> Result<SymExpr> {
    require_folded(expr)?;
    let mut out = Vec::with_capacity(2 * expr.len());
    for t in expr.terms() {
        nabla_hat_terms(t, &mut out);
    }
    Ok(SymExpr::from_terms(out))
}

/// ∇̌ on an expression without e^λ factors.
pub fn nabla_hat_conj(expr: &SymExpr) -> Result<SymExpr> {
    require_folded(expr)?;
    let mut out = Vec::with_capacity(2 * expr.len());
    for t in expr.terms() {
        nabla_check_terms(t, &mut out);
    }
    Ok(SymExpr::from_terms(out))
}

/// ∇̂λ and ∇̌λ as single terms.
fn lambda_gradients(regime: &Regime) -> (SymTerm, SymTerm) {
    match *regime {
        Regime::Asymptotic { phi_over_2pi: a } => (SymTerm::new(-a, 1, 0, -2.0, 0), SymTerm::new(a, 0, 1, -2.0, 0)),
        Regime::UniformField { b } => (SymTerm::new(-0.5 * b, 1, 0, 0.0, 0), SymTerm::new(0.5 * b, 0, 1, 0.0, 0)),
    }
}

fn check_regime(expr: &SymExpr, regime: &Regime) -> Result<()> {
    match regime {
        Regime::Asymptotic { .. } => require_folded(expr),
        Regime::UniformField { .. } => Ok(()),
    }
}

/// ∇̂ with the product rule through (e^λ)^γ.
pub fn nabla_hat_in(expr: &SymExpr, regime: &Regime) -> Result<SymExpr> {
    check_regime(expr, regime)?;
    let (grad, _) = lambda_gradients(regime);
    let mut out = Vec::with_capacity(3 * expr.len());
    for t in expr.terms() {
        nabla_hat_terms(t, &mut out);
        if t.gamma != 0 {
            out.push(t.times(&grad).scaled(re(t.gamma as f64)));
        }
    }
    Ok(SymExpr::from_terms(out))
}

/// ∇̌ with the product rule through (e^λ)^γ.
pub fn nabla_hat_conj_in(expr: &SymExpr, regime: &Regime) -> Result<SymExpr> {
    check_regime(expr, regime)?;
    let (_, grad) = lambda_gradients(regime);
    let mut out = Vec::with_capacity(3 * expr.len());
    for t in expr.terms() {
        nabla_check_terms(t, &mut out);
        if t.gamma != 0 {
            out.push(t.times(&grad).scaled(re(t.gamma as f64)));
        }
    }
    Ok(SymExpr::from_terms(out))
}

/// D₋ψ = ∇̂ψ + (∇̂λ)ψ. Asymptotically ∇̂λ = −(Φ/2π)·z·|z|^{−2}.
pub fn apply_d_minus(expr: &SymExpr, regime: &Regime) -> Result<SymExpr> {
    let (grad, _) = lambda_gradients(regime);
    Ok(nabla_hat_in(expr, regime)?.add(&expr.mul_term(&grad)))
}

/// D₊ψ = ∇̌ψ − (∇̌λ)ψ. Asymptotically ∇̌λ = +(Φ/2π)·z̄·|z|^{−2}.
pub fn apply_d_plus(expr: &SymExpr, regime: &Regime) -> Result<SymExpr> {
    let (_, grad) = lambda_gradients(regime);
    Ok(nabla_hat_conj_in(expr, regime)?.sub(&expr.mul_term(&grad)))
}
