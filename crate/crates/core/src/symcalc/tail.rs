//! Large-r tail exponents and the square-integrability of ladder states.
//!
//! A component whose dominant far-field power is r^ρ has |ψ|²·r ~ r^{2ρ+1},
//! so it is square integrable at infinity iff ρ < −1. At ρ = −1 the norm
//! grows like ln R.

use serde::{Deserialize, Serialize};

use super::ladder::{build_level, FluxBranch};
use super::ops::Regime;
use super::term::SymExpr;
use crate::error::{Error, Result};
use crate::field::FluxInfo;

/// |ρ + 1| below this is reported as marginal.
pub const MARGINAL_RHO_TOL: f64 = 1e-9;

/// Dominant large-r power of `expr`. Terms that are the same function are
/// merged first (z·z̄ = |z|²), so exact cancellations are honoured.
pub fn tail_exponent(expr: &SymExpr) -> Result<f64> {
    if expr.has_exp_factors() {
        return Err(Error::NotAsymptotic);
    }
    let reduced = expr.reduce_modulus();
    if reduced.is_zero() {
        return Err(Error::EmptyExpression);
    }
    Ok(reduced.terms().iter().map(|t| t.degree()).fold(f64::NEG_INFINITY, f64::max))
}

/// Paper-claimed cutoff j ≤ N + max(m, 1) − 1.
pub fn paper_j_max(flux: &FluxInfo, level: u32) -> i64 {
    flux.n_integer as i64 + level.max(1) as i64 - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// −∞ for the null expression.
    pub rho_max: f64,
    pub integrable: bool,
    /// Largest j satisfying ρ(j) < −1 along the family, none if even j = 0 fails.
    pub j_max_tool: Option<i64>,
    pub j_max_paper: i64,
    pub marginal: bool,
}

impl TailReport {
    fn null(flux: &FluxInfo, level: u32) -> Self {
        Self {
            rho_max: f64::NEG_INFINITY,
            integrable: true,
            j_max_tool: None,
            j_max_paper: paper_j_max(flux, level),
            marginal: false,
        }
    }
}

/// Largest integer j′ ≥ 0 with ρ + (j′ − j) < −1, given that a unit step in
/// j shifts ρ by one.
fn solve_for_j(rho: f64, j: u32) -> Option<i64> {
    let bound = j as f64 - 1.0 - rho;
    let jm = bound.ceil() as i64 - 1;
    (jm >= 0).then_some(jm)
}

/// Integrability of one component belonging to the family (j, level).
pub fn normalizability(expr: &SymExpr, flux: &FluxInfo, j: u32, level: u32) -> Result<TailReport> {
    if expr.is_zero() {
        return Ok(TailReport::null(flux, level));
    }
    let rho = match tail_exponent(expr) {
        Ok(r) => r,
        Err(Error::EmptyExpression) => return Ok(TailReport::null(flux, level)),
        Err(e) => return Err(e),
    };
    Ok(TailReport {
        rho_max: rho,
        integrable: rho < -1.0,
        j_max_tool: solve_for_j(rho, j),
        j_max_paper: paper_j_max(flux, level),
        marginal: (rho + 1.0).abs() < MARGINAL_RHO_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateState {
    pub j: u32,
    pub level: u32,
    pub rho_upper: Option<f64>,
    pub rho_lower: Option<f64>,
    /// Every nonzero component satisfies ρ < −1.
    pub integrable: bool,
    /// Every nonzero component satisfies ρ ≤ −1.
    pub integrable_inclusive: bool,
    /// Every nonzero component decays, ρ < 0.
    pub decaying: bool,
    pub marginal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyRow {
    pub m: u32,
    #[serde(rename = "E_m")]
    pub e_m: f64,
    pub paper_count: i64,
    pub tool_count: i64,
    pub marginal: bool,
    pub j_max_tool: Option<i64>,
    pub j_max_paper: i64,
    pub discrepancy: i64,
    /// Count under ρ ≤ −1.
    pub inclusive_count: i64,
    /// Count under ρ < 0.
    pub decay_count: i64,
    pub candidates: Vec<CandidateState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub phi: f64,
    pub phi_over_2pi: f64,
    pub n_integer: u32,
    pub branch: FluxBranch,
    pub b: f64,
    pub j_scan: u32,
    pub rows: Vec<DegeneracyRow>,
}

fn rho_of(expr: &SymExpr) -> Result<Option<f64>> {
    match tail_exponent(expr) {
        Ok(r) => Ok(Some(r)),
        Err(Error::EmptyExpression) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Tool vs paper degeneracy for levels 0..=m_max, scanning j = 0..=j_scan.
///
/// States are built by the ladder in the far-field regime (e^λ → |z|^{Φ/2π});
/// a candidate counts only when every nonzero component is square integrable.
pub fn degeneracy_table(flux: &FluxInfo, b: f64, m_max: u32, j_scan: u32) -> Result<DegeneracyReport> {
    let branch = FluxBranch::of(flux)?;
    let a = flux.phi_over_2pi();
    let regime = Regime::Asymptotic { phi_over_2pi: a };
    let mut rows = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        let candidates: Vec<CandidateState> = crate::par::map_range(j_scan as usize + 1, |j| {
            let s = build_level(j as u32, flux, b, m, &regime)?;
            let ru = rho_of(&s.spinor.upper)?;
            let rl = rho_of(&s.spinor.lower)?;
            let rhos: Vec<f64> = [ru, rl].into_iter().flatten().collect();
            Ok(CandidateState {
                j: j as u32,
                level: m,
                rho_upper: ru,
                rho_lower: rl,
                integrable: !rhos.is_empty() && rhos.iter().all(|&r| r < -1.0),
                integrable_inclusive: !rhos.is_empty() && rhos.iter().all(|&r| r <= -1.0 + MARGINAL_RHO_TOL),
                decaying: !rhos.is_empty() && rhos.iter().all(|&r| r < 0.0),
                marginal: rhos.iter().any(|&r| (r + 1.0).abs() < MARGINAL_RHO_TOL),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let count = |f: fn(&CandidateState) -> bool| candidates.iter().filter(|c| f(c)).count() as i64;
        let tool_count = count(|c| c.integrable);
        let j_max_tool = candidates.iter().filter(|c| c.integrable).map(|c| c.j as i64).max();
        let paper_count = flux.n_integer as i64 + m.max(1) as i64;
        rows.push(DegeneracyRow {
            m,
            e_m: (2.0 * m as f64 * b.abs()).sqrt(),
            paper_count,
            tool_count,
            marginal: flux.marginal || candidates.iter().any(|c| c.marginal),
            j_max_tool,
            j_max_paper: paper_j_max(flux, m),
            discrepancy: tool_count - paper_count,
            inclusive_count: count(|c| c.integrable_inclusive),
            decay_count: count(|c| c.decaying),
            candidates,
        });
    }
    Ok(DegeneracyReport { phi: flux.phi, phi_over_2pi: a, n_integer: flux.n_integer, branch, b, j_scan, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::term::SymTerm;
    use std::f64::consts::PI;

    fn flux_quanta(q: f64) -> FluxInfo {
        FluxInfo::from_phi(-2.0 * PI * q).unwrap()
    }

    #[test]
    fn exponent_examples() {
        let e = SymExpr::from(SymTerm::monomial(0, 1, -2.5));
        assert!((tail_exponent(&e).unwrap() + 1.5).abs() < 1e-15);
        assert_eq!(tail_exponent(&SymExpr::one()).unwrap(), 0.0);
        assert!(matches!(tail_exponent(&SymExpr::zero()), Err(Error::EmptyExpression)));
    }

    #[test]
    fn zero_mode_report_at_two_and_a_half_quanta() {
        let f = flux_quanta(2.5);
        let e = SymExpr::from(SymTerm::monomial(0, 1, -2.5));
        let r = normalizability(&e, &f, 1, 0).unwrap();
        assert!(r.integrable);
        assert_eq!(r.j_max_tool, Some(1));
        assert_eq!(r.j_max_paper, 2);
        let e3 = SymExpr::from(SymTerm::monomial(0, 3, -2.5));
        assert!(!normalizability(&e3, &f, 3, 0).unwrap().integrable);
        let null = normalizability(&SymExpr::zero(), &f, 0, 0).unwrap();
        assert!(null.integrable && null.rho_max == f64::NEG_INFINITY);
    }

    #[test]
    fn table_counts_at_two_and_a_half_quanta() {
        let f = flux_quanta(2.5);
        let t = degeneracy_table(&f, -1.0, 3, 12).unwrap();
        let paper: Vec<i64> = t.rows.iter().map(|r| r.paper_count).collect();
        let tool: Vec<i64> = t.rows.iter().map(|r| r.tool_count).collect();
        let decay: Vec<i64> = t.rows.iter().map(|r| r.decay_count).collect();
        assert_eq!(paper, vec![3, 3, 4, 5]);
        assert_eq!(tool, vec![2, 2, 3, 4]);
        assert_eq!(decay, vec![3, 3, 4, 5]);
        assert_eq!(t.rows[0].j_max_tool, Some(1));
        assert_eq!(t.rows[2].j_max_paper, 3);
    }

    #[test]
    fn small_flux_has_no_tool_zero_mode() {
        let f = flux_quanta(0.3);
        let t = degeneracy_table(&f, -1.0, 0, 5).unwrap();
        assert_eq!(t.rows[0].paper_count, 1);
        assert_eq!(t.rows[0].tool_count, 0);
        assert_eq!(t.rows[0].j_max_tool, None);
    }

    #[test]
    fn positive_branch_mirrors_negative() {
        let neg = degeneracy_table(&flux_quanta(2.5), -1.0, 3, 10).unwrap();
        let pos = degeneracy_table(&FluxInfo::from_phi(5.0 * PI).unwrap(), 1.0, 3, 10).unwrap();
        assert_eq!(pos.branch, FluxBranch::Positive);
        for (a, b) in neg.rows.iter().zip(&pos.rows) {
            assert_eq!(a.tool_count, b.tool_count);
            assert_eq!(a.paper_count, b.paper_count);
        }
    }

    #[test]
    fn integer_flux_flags_marginal_boundary() {
        let t = degeneracy_table(&flux_quanta(2.0), -1.0, 1, 6).unwrap();
        assert!(t.rows[0].marginal);
        // j = 1 sits at ρ = −1: excluded strictly, included inclusively.
        assert_eq!(t.rows[0].tool_count, 1);
        assert_eq!(t.rows[0].inclusive_count, 2);
    }

    #[test]
    fn monotone_across_levels() {
        for q in [0.4, 1.3, 2.5, 3.75, 5.1] {
            let t = degeneracy_table(&flux_quanta(q), -1.0, 6, 16).unwrap();
            for w in t.rows.windows(2) {
                assert!(w[1].tool_count >= w[0].tool_count - 1);
                let a = w[0].j_max_tool.unwrap_or(-1);
                let b = w[1].j_max_tool.unwrap_or(-1);
                assert!(b >= a - 1);
            }
        }
    }
}
