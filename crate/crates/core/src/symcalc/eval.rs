use num_complex::Complex64;

use super::term::SymExpr;
use crate::error::{Error, Result};
use crate::potential::AuxPotential;

/// Source of e^λ when evaluating an expression.
#[derive(Clone, Copy, Debug)]
pub enum EvalMode<'a> {
    /// e^{γλ} → |z|^{γ·Φ/2π}.
    Asymptotic { phi_over_2pi: f64 },
    /// λ interpolated bilinearly from a grid.
    Aux(&'a AuxPotential),
    /// λ = B·r²/4.
    UniformField { b: f64 },
}

pub fn evaluate_expr(expr: &SymExpr, x: f64, y: f64, mode: EvalMode<'_>) -> Result<Complex64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::OutOfDomain { x, y });
    }
    let exp_lambda = match mode {
        EvalMode::Asymptotic { phi_over_2pi } => x.hypot(y).powf(phi_over_2pi),
        EvalMode::Aux(aux) => aux.grid_lambda.interpolate(x, y)?.exp(),
        EvalMode::UniformField { b } => (0.25 * b * (x * x + y * y)).exp(),
    };
    Ok(expr.eval(x, y, exp_lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldProfile;
    use crate::grid::GridSpec;
    use crate::symcalc::term::SymTerm;

    #[test]
    fn constants_and_z() {
        let one = SymExpr::one();
        let m = EvalMode::Asymptotic { phi_over_2pi: -1.0 };
        assert_eq!(evaluate_expr(&one, 3.0, -4.0, m).unwrap(), Complex64::new(1.0, 0.0));
        let z = SymExpr::from(SymTerm::monomial(1, 0, 0.0));
        assert_eq!(evaluate_expr(&z, 1.0, 0.0, m).unwrap(), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn uniform_zero_mode_from_grid_lambda() {
        let p = FieldProfile::uniform_everywhere(-1.0).unwrap();
        let g = GridSpec::new(6.0, 241).unwrap();
        let aux = AuxPotential::uniform(&p, g).unwrap();
        let psi = SymExpr::from(SymTerm::new(1.0, 0, 0, 0.0, 1));
        let mut worst = 0.0f64;
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let r = 0.1 * k as f64;
            let (x, y) = (r * t.cos(), r * t.sin());
            let v = evaluate_expr(&psi, x, y, EvalMode::Aux(&aux)).unwrap();
            let exact = (-r * r / 4.0).exp();
            worst = worst.max((v.re - exact).abs());
            let u = evaluate_expr(&psi, x, y, EvalMode::UniformField { b: -1.0 }).unwrap();
            assert!((u.re - exact).abs() < 1e-15);
        }
        // bilinear error of λ is h²·|∂²λ|/8 = h²/16
        assert!(worst < g.h * g.h / 8.0, "worst {worst}");
        assert!(matches!(evaluate_expr(&psi, 7.0, 0.0, EvalMode::Aux(&aux)), Err(Error::OutOfDomain { .. })));
    }
}
