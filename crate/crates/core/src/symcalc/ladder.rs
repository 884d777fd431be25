//! Zero modes and the ladder map between Landau-like levels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ops::{apply_d_minus, apply_d_plus, Regime};
use super::term::{SpinorExpr, SymExpr, SymTerm};
use crate::error::{Error, Result};
use crate::field::FluxInfo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxBranch {
    /// Φ < 0: zero modes live in ψ_a, the ladder uses D₋.
    #[serde(rename = "-")]
    Negative,
    /// Φ > 0: zero modes live in ψ_b, the ladder uses D₊.
    #[serde(rename = "+")]
    Positive,
}

impl FluxBranch {
    pub fn of(flux: &FluxInfo) -> Result<Self> {
        match flux.sign {
            s if s < 0 => Ok(Self::Negative),
            s if s > 0 => Ok(Self::Positive),
            _ => Err(Error::ZeroFlux),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Self::Negative => "-",
            Self::Positive => "+",
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Negative => "negative",
            Self::Positive => "positive",
        }
    }
}

/// E = sign·√(2·level·|B|), kept as the exact pair (level, |B|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEnergy {
    pub level: u32,
    pub field_abs: f64,
    pub sign: i8,
}

impl LevelEnergy {
    pub fn zero(field_abs: f64) -> Self {
        Self { level: 0, field_abs, sign: 1 }
    }

    /// E².
    pub fn squared(&self) -> f64 {
        2.0 * self.level as f64 * self.field_abs
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * self.squared().sqrt()
    }

    /// Ê with Ê² = E² + 2|B|, positive root.
    pub fn next(&self) -> Self {
        Self { level: self.level + 1, field_abs: self.field_abs, sign: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderState {
    pub spinor: SpinorExpr,
    pub level: u32,
    pub j: u32,
    pub energy: LevelEnergy,
    pub branch: FluxBranch,
}

impl LadderState {
    pub fn energy_value(&self) -> f64 {
        self.energy.value()
    }

    /// The partner at −E: σ_z applied to the spinor.
    pub fn negative_partner(&self) -> Self {
        let mut out = self.clone();
        out.spinor.lower = out.spinor.lower.scale(Complex64::new(-1.0, 0.0));
        out.energy.sign = -out.energy.sign;
        out
    }

    /// Fold e^λ into |z|^{Φ/2π} in both components.
    pub fn fold_asymptotic(&self, phi_over_2pi: f64) -> Self {
        Self { spinor: self.spinor.fold_asymptotic(phi_over_2pi), ..self.clone() }
    }

    /// The component holding the zero mode of the branch (ψ_a for Φ < 0).
    pub fn active(&self) -> &SymExpr {
        match self.branch {
            FluxBranch::Negative => &self.spinor.upper,
            FluxBranch::Positive => &self.spinor.lower,
        }
    }
}

/// Φ < 0: (z̄^j e^λ, 0). Φ > 0: (0, z^j e^{−λ}).
pub fn zero_mode(j: u32, flux: &FluxInfo) -> Result<LadderState> {
    let branch = FluxBranch::of(flux)?;
    let spinor = match branch {
        FluxBranch::Negative => SpinorExpr::new(SymTerm::new(1.0, 0, j, 0.0, 1).into(), SymExpr::zero()),
        FluxBranch::Positive => SpinorExpr::new(SymExpr::zero(), SymTerm::new(1.0, j, 0, 0.0, -1).into()),
    };
    Ok(LadderState { spinor, level: 0, j, energy: LevelEnergy::zero(0.0), branch })
}

/// Raise `state` by one level in a field of strength `b`.
///
/// Φ < 0 (needs B < 0): (Ê⁻¹D₋ψ_a, ψ_a). Φ > 0 (needs B > 0): (ψ_b, Ê⁻¹D₊ψ_b).
/// `Ê = √(E² + 2|B|)`, positive root. In the asymptotic regime the state is
/// folded first.
pub fn ladder_up(state: &LadderState, b: f64, regime: &Regime) -> Result<LadderState> {
    let consistent = match state.branch {
        FluxBranch::Negative => b < 0.0,
        FluxBranch::Positive => b > 0.0,
    };
    if !consistent || !b.is_finite() {
        return Err(Error::BranchMismatch { b, branch: state.branch.name() });
    }
    if let Regime::UniformField { b: rb } = regime {
        if *rb != b {
            return Err(Error::InvalidRequest(format!("regime field {rb} differs from ladder field {b}")));
        }
    }
    let working = match regime {
        Regime::Asymptotic { phi_over_2pi } => state.fold_asymptotic(*phi_over_2pi),
        Regime::UniformField { .. } => state.clone(),
    };
    let field_abs = b.abs();
    if state.level > 0 && state.energy.field_abs != field_abs {
        return Err(Error::InvalidRequest(format!(
            "state was built with |B| = {}, ladder called with |B| = {field_abs}",
            state.energy.field_abs
        )));
    }
    let current = LevelEnergy { level: state.level, field_abs, sign: 1 };
    let next = current.next();
    let inv = Complex64::new(1.0 / next.value(), 0.0);
    let spinor = match state.branch {
        FluxBranch::Negative => {
            let psi = &working.spinor.upper;
            SpinorExpr::new(apply_d_minus(psi, regime)?.scale(inv), psi.clone())
        }
        FluxBranch::Positive => {
            let psi = &working.spinor.lower;
            SpinorExpr::new(psi.clone(), apply_d_plus(psi, regime)?.scale(inv))
        }
    };
    Ok(LadderState { spinor, level: next.level, j: state.j, energy: next, branch: state.branch })
}

/// `m` ladder steps from the zero mode.
pub fn build_level(j: u32, flux: &FluxInfo, b: f64, m: u32, regime: &Regime) -> Result<LadderState> {
    let mut s = zero_mode(j, flux)?;
    if m == 0 {
        if let Regime::Asymptotic { phi_over_2pi } = regime {
            s = s.fold_asymptotic(*phi_over_2pi);
        }
        s.energy.field_abs = b.abs();
    }
    for _ in 0..m {
        s = ladder_up(&s, b, regime)?;
    }
    Ok(s)
}
