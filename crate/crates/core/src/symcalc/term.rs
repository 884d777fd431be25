use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Two powers of |z| closer than this are the same power.
pub const S_MERGE_TOL: f64 = 1e-12;
/// Merged coefficients below this fraction of the largest one are dropped by
/// [`SymExpr::reduce_modulus`].
pub const CANCEL_TOL: f64 = 1e-12;

/// c · zᵖ · z̄^q · |z|^s · (e^λ)^γ with z = ix + y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TermRepr", into = "TermRepr")]
pub struct SymTerm {
    pub coeff: Complex64,
    pub p: u32,
    pub q: u32,
    pub s: f64,
    pub gamma: i32,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    re: f64,
    im: f64,
    p: u32,
    q: u32,
    s: f64,
    gamma: i32,
}

impl From<TermRepr> for SymTerm {
    fn from(t: TermRepr) -> Self {
        Self { coeff: Complex64::new(t.re, t.im), p: t.p, q: t.q, s: t.s, gamma: t.gamma }
    }
}

impl From<SymTerm> for TermRepr {
    fn from(t: SymTerm) -> Self {
        Self { re: t.coeff.re, im: t.coeff.im, p: t.p, q: t.q, s: t.s, gamma: t.gamma }
    }
}

impl SymTerm {
    pub fn new(coeff: impl Into<Complex64>, p: u32, q: u32, s: f64, gamma: i32) -> Self {
        Self { coeff: coeff.into(), p, q, s, gamma }
    }

    pub fn monomial(p: u32, q: u32, s: f64) -> Self {
        Self::new(1.0, p, q, s, 0)
    }

    /// Large-r power p + q + s (meaningful once γ is folded).
    pub fn degree(&self) -> f64 {
        self.p as f64 + self.q as f64 + self.s
    }

    pub fn same_key(&self, other: &SymTerm) -> bool {
        self.p == other.p && self.q == other.q && self.gamma == other.gamma && (self.s - other.s).abs() <= S_MERGE_TOL
    }

    fn key_cmp(&self, other: &SymTerm) -> Ordering {
        self.gamma
            .cmp(&other.gamma)
            .then(self.p.cmp(&other.p))
            .then(self.q.cmp(&other.q))
            .then(self.s.total_cmp(&other.s))
    }

    pub fn times(&self, other: &SymTerm) -> SymTerm {
        SymTerm {
            coeff: self.coeff * other.coeff,
            p: self.p + other.p,
            q: self.q + other.q,
            s: self.s + other.s,
            gamma: self.gamma + other.gamma,
        }
    }

    pub fn scaled(&self, c: Complex64) -> SymTerm {
        SymTerm { coeff: self.coeff * c, ..*self }
    }

    /// Value at (x, y), with `exp_lambda` the value of e^λ there.
    pub fn eval(&self, x: f64, y: f64, exp_lambda: f64) -> Complex64 {
        let z = Complex64::new(y, x);
        let r = x.hypot(y);
        let mut v = self.coeff * z.powu(self.p) * z.conj().powu(self.q);
        if self.s != 0.0 {
            v *= r.powf(self.s);
        }
        if self.gamma != 0 {
            v *= exp_lambda.powi(self.gamma);
        }
        v
    }
}

impl fmt::Display for SymTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6}{:+.6}i)", self.coeff.re, self.coeff.im)?;
        if self.p > 0 {
            write!(f, "·z^{}", self.p)?;
        }
        if self.q > 0 {
            write!(f, "·z̄^{}", self.q)?;
        }
        if self.s != 0.0 {
            write!(f, "·|z|^{}", self.s)?;
        }
        if self.gamma != 0 {
            write!(f, "·e^({}λ)", self.gamma)?;
        }
        Ok(())
    }
}

/// Canonical sum of [`SymTerm`]s: sorted by (γ, p, q, s), no repeated key, no
/// zero coefficient. The empty sum is the zero function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<SymTerm>", into = "Vec<SymTerm>")]
pub struct SymExpr {
    terms: Vec<SymTerm>,
}

impl From<Vec<SymTerm>> for SymExpr {
    fn from(terms: Vec<SymTerm>) -> Self {
        Self::from_terms(terms)
    }
}

impl From<SymExpr> for Vec<SymTerm> {
    fn from(e: SymExpr) -> Self {
        e.terms
    }
}

impl From<SymTerm> for SymExpr {
    fn from(t: SymTerm) -> Self {
        Self::from_terms(vec![t])
    }
}

impl SymExpr {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn one() -> Self {
        SymTerm::monomial(0, 0, 0.0).into()
    }

    pub fn from_terms(mut terms: Vec<SymTerm>) -> Self {
        terms.sort_by(|a, b| a.key_cmp(b));
        let mut out: Vec<SymTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.same_key(&t) => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Self { terms: out }
    }

    pub fn terms(&self) -> &[SymTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn has_exp_factors(&self) -> bool {
        self.terms.iter().any(|t| t.gamma != 0)
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms)
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> SymExpr {
        Self::from_terms(self.terms.iter().map(|t| t.scaled(c)).collect())
    }

    pub fn mul_term(&self, m: &SymTerm) -> SymExpr {
        Self::from_terms(self.terms.iter().map(|t| t.times(m)).collect())
    }

    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.times(b));
            }
        }
        Self::from_terms(terms)
    }

    /// Replace (e^λ)^γ by |z|^{γ·a}, i.e. λ ≈ a·ln|z| with r₀ = 1.
    pub fn fold_asymptotic(&self, phi_over_2pi: f64) -> SymExpr {
        Self::from_terms(
            self.terms.iter().map(|t| SymTerm { s: t.s + t.gamma as f64 * phi_over_2pi, gamma: 0, ..*t }).collect(),
        )
    }

    /// Rewrite z·z̄ as |z|² so that min(p, q) = 0 in every term, then merge.
    /// Terms of equal function collapse here, and coefficients that cancel to
    /// round-off are dropped.
    pub fn reduce_modulus(&self) -> SymExpr {
        let reduced = Self::from_terms(
            self.terms
                .iter()
                .map(|t| {
                    let k = t.p.min(t.q);
                    SymTerm { p: t.p - k, q: t.q - k, s: t.s + 2.0 * k as f64, ..*t }
                })
                .collect(),
        );
        let scale = self.max_coeff();
        let terms = reduced.terms.into_iter().filter(|t| t.coeff.norm() > CANCEL_TOL * scale).collect();
        Self { terms }
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// True when the two expressions are the same function, up to
    /// `rel_tol` relative to the larger coefficient.
    pub fn same_function(&self, other: &SymExpr, rel_tol: f64) -> bool {
        let d = self.sub(other).reduce_modulus();
        let scale = self.max_coeff().max(other.max_coeff()).max(f64::MIN_POSITIVE);
        d.terms.iter().all(|t| t.coeff.norm() <= rel_tol * scale)
    }

    pub fn eval(&self, x: f64, y: f64, exp_lambda: f64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(x, y, exp_lambda)).sum()
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Two-component spinor (ψ_a, ψ_b).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinorExpr {
    pub upper: SymExpr,
    pub lower: SymExpr,
}

impl SpinorExpr {
    pub fn new(upper: SymExpr, lower: SymExpr) -> Self {
        Self { upper, lower }
    }

    pub fn is_null(&self) -> bool {
        self.upper.is_zero() && self.lower.is_zero()
    }

    pub fn fold_asymptotic(&self, phi_over_2pi: f64) -> SpinorExpr {
        Self { upper: self.upper.fold_asymptotic(phi_over_2pi), lower: self.lower.fold_asymptotic(phi_over_2pi) }
    }

    pub fn scale(&self, c: Complex64) -> SpinorExpr {
        Self { upper: self.upper.scale(c), lower: self.lower.scale(c) }
    }

    pub fn components(&self) -> [&SymExpr; 2] {
        [&self.upper, &self.lower]
    }
}
