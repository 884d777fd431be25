//! Lattice Dirac-Weyl operator with Peierls links and a σ_z Wilson term.
//!
//! D_j = −i∇_j with the covariant central difference
//! ∇_xψ(i) = [U(i)ψ(i+1) − U(i−1)*ψ(i−1)]/2h and U(i) = exp(i·h·A_x(i+½)),
//! A at the link midpoint taken as the mean of the two node values. Outside
//! the grid ψ = 0.
//!
//! H = [[W, D₋], [D₊, −W]] with D± = D₁ ± iD₂ and W = (w·h/2)·(−Δ_cov).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::grid::{ComplexGrid, GridSpec, RealGrid};
use crate::potential::{gauge_from_lambda, sample_field, solve_lambda_with, AuxPotential, GaugeField, LambdaMethod};

use super::spinor::GridSpinor;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Band (nodes) where a test function must vanish before a commutator check.
pub const COMMUTATOR_BAND: usize = 5;
/// Band (nodes) dropped from residual norms.
pub const RESIDUAL_BAND: usize = 3;

#[derive(Clone, Debug)]
pub struct DiracOperator {
    pub spec: GridSpec,
    pub gauge: GaugeField,
    /// Field used for the −2B side of the commutator identity.
    pub b_field: RealGrid,
    pub wilson: f64,
    ux: Vec<Complex64>,
    uy: Vec<Complex64>,
}

/// Neighbour values of one component around a site, link phases applied.
struct Hood {
    c: Complex64,
    xp: Complex64,
    xm: Complex64,
    yp: Complex64,
    ym: Complex64,
}

impl DiracOperator {
    pub fn new(gauge: GaugeField, b_field: RealGrid, wilson: f64) -> Result<Self> {
        gauge.ax.spec.check_same(&gauge.ay.spec)?;
        gauge.ax.spec.check_same(&b_field.spec)?;
        if !(wilson >= 0.0 && wilson.is_finite()) {
            return Err(Error::InvalidRequest(format!("Wilson parameter must be ≥ 0, got {wilson}")));
        }
        let spec = gauge.spec();
        let n = spec.n;
        let h = spec.h;
        let mut ux = vec![ZERO; spec.len()];
        let mut uy = vec![ZERO; spec.len()];
        crate::par::fill(&mut ux, |k| {
            let (i, j) = spec.coords_of(k);
            if i + 1 < n {
                let a = 0.5 * (gauge.ax.at(i, j) + gauge.ax.at(i + 1, j));
                Complex64::from_polar(1.0, h * a)
            } else {
                ZERO
            }
        });
        crate::par::fill(&mut uy, |k| {
            let (i, j) = spec.coords_of(k);
            if j + 1 < n {
                let a = 0.5 * (gauge.ay.at(i, j) + gauge.ay.at(i, j + 1));
                Complex64::from_polar(1.0, h * a)
            } else {
                ZERO
            }
        });
        Ok(Self { spec, gauge, b_field, wilson, ux, uy })
    }

    /// A ≡ 0.
    pub fn free(spec: GridSpec, wilson: f64) -> Result<Self> {
        Self::new(GaugeField::zeros(spec), RealGrid::zeros(spec), wilson)
    }

    /// Operator for `profile`: λ from the closed form for a plane-filling
    /// field, from the Poisson solve otherwise.
    pub fn from_profile(profile: &FieldProfile, spec: GridSpec, wilson: f64) -> Result<Self> {
        let aux = if profile.unbounded_flux() {
            AuxPotential::uniform(profile, spec)?
        } else {
            solve_lambda_with(profile, spec, LambdaMethod::FastPoisson, crate::potential::DEFAULT_R0)?
        };
        Self::from_aux(&aux, wilson)
    }

    pub fn from_aux(aux: &AuxPotential, wilson: f64) -> Result<Self> {
        let gauge = gauge_from_lambda(aux);
        let b = sample_field(&aux.profile_ref, aux.spec());
        Self::new(gauge, b, wilson)
    }

    pub fn dim(&self) -> usize {
        2 * self.spec.len()
    }

    pub fn with_wilson(&self, wilson: f64) -> Result<Self> {
        Self::new(self.gauge.clone(), self.b_field.clone(), wilson)
    }

    /// Link phase from site k towards +x, or `None` on the last column.
    #[inline]
    pub(crate) fn link_x(&self, k: usize) -> Option<Complex64> {
        let (i, _) = self.spec.coords_of(k);
        (i + 1 < self.spec.n).then(|| self.ux[k])
    }

    #[inline]
    pub(crate) fn link_y(&self, k: usize) -> Option<Complex64> {
        let (_, j) = self.spec.coords_of(k);
        (j + 1 < self.spec.n).then(|| self.uy[k])
    }

    #[inline]
    fn hood<F: Fn(usize) -> Complex64>(&self, k: usize, f: F) -> Hood {
        let n = self.spec.n;
        let (i, j) = self.spec.coords_of(k);
        Hood {
            c: f(k),
            xp: if i + 1 < n { self.ux[k] * f(k + 1) } else { ZERO },
            xm: if i > 0 { self.ux[k - 1].conj() * f(k - 1) } else { ZERO },
            yp: if j + 1 < n { self.uy[k] * f(k + n) } else { ZERO },
            ym: if j > 0 { self.uy[k - n].conj() * f(k - n) } else { ZERO },
        }
    }

    #[inline]
    fn d_minus_at(&self, hd: &Hood) -> Complex64 {
        let inv = 0.5 / self.spec.h;
        (-I * (hd.xp - hd.xm) - (hd.yp - hd.ym)) * inv
    }

    #[inline]
    fn d_plus_at(&self, hd: &Hood) -> Complex64 {
        let inv = 0.5 / self.spec.h;
        (-I * (hd.xp - hd.xm) + (hd.yp - hd.ym)) * inv
    }

    #[inline]
    fn neg_lap_at(&self, hd: &Hood) -> Complex64 {
        let h2 = self.spec.h * self.spec.h;
        (hd.c * 4.0 - hd.xp - hd.xm - hd.yp - hd.ym) / h2
    }

    #[inline]
    fn wilson_scale(&self) -> f64 {
        0.5 * self.wilson * self.spec.h
    }

    /// y = H·x on the interleaved layout.
    pub fn apply_h(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let ws = self.wilson_scale();
        crate::par::for_each_chunk_mut(y, 2, |k, out| {
            let up = self.hood(k, |s| x[2 * s]);
            let lo = self.hood(k, |s| x[2 * s + 1]);
            let mut a = self.d_minus_at(&lo);
            let mut b = self.d_plus_at(&up);
            if ws != 0.0 {
                a += self.neg_lap_at(&up) * ws;
                b -= self.neg_lap_at(&lo) * ws;
            }
            out[0] = a;
            out[1] = b;
        });
    }

    /// H·ψ: ψ_a′ = D₋ψ_b + Wψ_a, ψ_b′ = D₊ψ_a − Wψ_b.
    #[allow(non_snake_case)]
    pub fn apply_D(&self, psi: &GridSpinor) -> Result<GridSpinor> {
        self.spec.check_same(&psi.spec())?;
        let x = psi.to_interleaved();
        let mut y = vec![ZERO; x.len()];
        self.apply_h(&x, &mut y);
        GridSpinor::from_interleaved(self.spec, &y)
    }

    fn scalar_map<F>(&self, f: &ComplexGrid, op: F) -> ComplexGrid
    where
        F: Fn(&Self, &Hood) -> Complex64 + Sync + Send,
    {
        let mut out = ComplexGrid::zeros(self.spec);
        crate::par::fill(&mut out.data, |k| op(self, &self.hood(k, |s| f.data[s])));
        out
    }

    pub fn d_minus(&self, f: &ComplexGrid) -> ComplexGrid {
        self.scalar_map(f, Self::d_minus_at)
    }

    pub fn d_plus(&self, f: &ComplexGrid) -> ComplexGrid {
        self.scalar_map(f, Self::d_plus_at)
    }

    pub fn neg_laplacian(&self, f: &ComplexGrid) -> ComplexGrid {
        self.scalar_map(f, Self::neg_lap_at)
    }

    /// max over interior nodes of |([D₊, D₋] + 2B)f| / max|f|.
    pub fn commutator_check(&self, f: &ComplexGrid) -> Result<f64> {
        self.spec.check_same(&f.spec)?;
        let g = self.spec;
        let fmax = f.max_abs();
        if fmax == 0.0 {
            return Err(Error::NullState);
        }
        let edge = crate::par::fixed_max(g.len(), |k| {
            let (i, j) = g.coords_of(k);
            if g.is_interior(i, j, COMMUTATOR_BAND) {
                0.0
            } else {
                f.data[k].norm()
            }
        });
        if edge > 1e-10 * fmax {
            return Err(Error::SupportTouchesBoundary { band: COMMUTATOR_BAND, value: edge });
        }
        let pm = self.d_plus(&self.d_minus(f));
        let mp = self.d_minus(&self.d_plus(f));
        let dev = crate::par::fixed_max(g.len(), |k| {
            let (i, j) = g.coords_of(k);
            if !g.is_interior(i, j, 2) {
                return 0.0;
            }
            (pm.data[k] - mp.data[k] + f.data[k] * (2.0 * self.b_field.data[k])).norm()
        });
        Ok(dev / fmax)
    }

    /// ‖Hψ − Eψ‖ / ‖ψ‖ over nodes at least 3 from the boundary.
    pub fn residual(&self, psi: &GridSpinor, energy: f64) -> Result<f64> {
        let norm = psi.interior_norm_sqr(RESIDUAL_BAND);
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::NullState);
        }
        let hp = self.apply_D(psi)?;
        let diff = GridSpinor {
            upper: ComplexGrid {
                spec: self.spec,
                data: hp.upper.data.iter().zip(&psi.upper.data).map(|(a, b)| a - b * energy).collect(),
            },
            lower: ComplexGrid {
                spec: self.spec,
                data: hp.lower.data.iter().zip(&psi.lower.data).map(|(a, b)| a - b * energy).collect(),
            },
        };
        Ok((diff.interior_norm_sqr(RESIDUAL_BAND) / norm).sqrt())
    }

    /// max |⟨u, Hv⟩ − conj⟨v, Hu⟩| over `trials` random pairs supported at
    /// least one node inside the boundary, normalized by ‖u‖‖v‖.
    pub fn hermiticity_defect(&self, trials: usize, seed: u64) -> f64 {
        let g = self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let random = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            (0..self.dim())
                .map(|u| {
                    let (i, j) = g.coords_of(u / 2);
                    if g.is_interior(i, j, 1) {
                        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                    } else {
                        ZERO
                    }
                })
                .collect()
        };
        for _ in 0..trials {
            let u = random(&mut rng);
            let v = random(&mut rng);
            let mut hu = vec![ZERO; u.len()];
            let mut hv = vec![ZERO; v.len()];
            self.apply_h(&u, &mut hu);
            self.apply_h(&v, &mut hv);
            let uhv: Complex64 = u.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
            let vhu: Complex64 = v.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
            let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max((uhv - vhu.conj()).norm() / (nu * nv));
        }
        worst
    }

    /// h²⟨ψ, −Δ_cov ψ⟩/(8‖ψ‖²) ∈ [0, 1]; near 1 for states at the lattice
    /// momentum corner (π/h, π/h), near 0 for smooth states.
    pub fn high_momentum_weight(&self, x: &[Complex64]) -> f64 {
        let g = self.spec;
        let h2 = g.h * g.h;
        let num = crate::par::fixed_sum(g.len(), |k| {
            let up = self.hood(k, |s| x[2 * s]);
            let lo = self.hood(k, |s| x[2 * s + 1]);
            (x[2 * k].conj() * self.neg_lap_at(&up) + x[2 * k + 1].conj() * self.neg_lap_at(&lo)).re
        });
        let den = crate::par::fixed_sum(x.len(), |k| x[k].norm_sqr());
        h2 * num / (8.0 * den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_spinor_has_zero_interior_image() {
        let g = GridSpec::new(2.0, 21).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let psi = GridSpinor::from_fn(g, |_, _| (Complex64::new(1.0, 0.5), Complex64::new(-2.0, 0.0)));
        let out = op.apply_D(&psi).unwrap();
        for j in 1..g.n - 1 {
            for i in 1..g.n - 1 {
                assert!(out.upper.at(i, j).norm() < 1e-12);
                assert!(out.lower.at(i, j).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plane_wave_dispersion() {
        let g = GridSpec::new(4.0, 129).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let k = PI / (8.0 * g.h);
        let psi = GridSpinor::from_fn(g, |x, _| (ZERO, Complex64::from_polar(1.0, k * x)));
        let out = op.apply_D(&psi).unwrap();
        let expect = (k * g.h).sin() / g.h;
        let v = out.upper.at(64, 64).norm();
        assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
        assert!((expect - k * (1.0 - (k * g.h).powi(2) / 6.0)).abs() < 1e-3 * k);
    }

    #[test]
    fn hermitian_with_field_and_wilson() {
        let p = FieldProfile::gaussian(-1.3, 0.8).unwrap();
        let op = DiracOperator::from_profile(&p, GridSpec::new(6.0, 64).unwrap(), 0.5).unwrap();
        assert!(op.hermiticity_defect(3, 7) < 1e-12);
    }

    #[test]
    fn commutator_vanishes_without_field() {
        let g = GridSpec::new(8.0, 96).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let f = ComplexGrid::from_fn(g, |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.3 * x * (-(x * x + y * y)).exp())
        });
        assert!(op.commutator_check(&f).unwrap() < 1e-12);
    }

    #[test]
    fn commutator_rejects_boundary_support() {
        let g = GridSpec::new(2.0, 40).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let f = ComplexGrid::from_fn(g, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(op.commutator_check(&f), Err(Error::SupportTouchesBoundary { .. })));
    }

    #[test]
    fn residual_of_null_state_is_error() {
        let g = GridSpec::new(2.0, 16).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        assert!(matches!(op.residual(&GridSpinor::zeros(g), 0.0), Err(Error::NullState)));
    }

    #[test]
    fn high_momentum_weight_separates_smooth_and_staggered() {
        let g = GridSpec::new(4.0, 64).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let smooth =
            GridSpinor::from_fn(g, |x, y| (Complex64::new((-(x * x + y * y)).exp(), 0.0), ZERO)).to_interleaved();
        let stag = GridSpinor::from_fn(g, |x, y| {
            let (i, j) = (((x + 4.0) / g.h).round() as i64, ((y + 4.0) / g.h).round() as i64);
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            (Complex64::new(s * (-(x * x + y * y)).exp(), 0.0), ZERO)
        })
        .to_interleaved();
        assert!(op.high_momentum_weight(&smooth) < 0.05);
        assert!(op.high_momentum_weight(&stag) > 0.9);
    }
}
