//! Localized magnetic-field profiles B(x, y) and their total flux.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance from an integer at which |Φ|/2π is reported as marginal.
pub const MARGINAL_FLUX_TOL: f64 = 1e-9;

/// Fraction of a Gaussian's flux left outside its effective support radius.
const GAUSSIAN_SUPPORT_TAIL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldKind {
    /// B0 inside a disk of radius `radius`, zero outside.
    UniformDisk { b0: f64, radius: f64 },
    /// B0·exp(−r²/2σ²).
    Gaussian { b0: f64, sigma: f64 },
    /// B0 on the whole plane. Its flux is unbounded; lattice oracle runs only.
    UniformEverywhere { b0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub kind: FieldKind,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxInfo {
    /// Total flux Φ.
    pub phi: f64,
    /// N = floor(|Φ|/2π).
    pub n_integer: u32,
    /// sign(Φ), 0 for a field-free profile.
    pub sign: i8,
    /// |Φ|/2π lies within [`MARGINAL_FLUX_TOL`] of an integer.
    pub marginal: bool,
}

impl FluxInfo {
    pub fn from_phi(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::NonFiniteFlux(phi));
        }
        let quanta = phi.abs() / (2.0 * PI);
        let n_integer = quanta.floor() as u32;
        let frac = quanta - quanta.round();
        let sign = if phi > 0.0 {
            1
        } else if phi < 0.0 {
            -1
        } else {
            0
        };
        Ok(Self { phi, n_integer, sign, marginal: frac.abs() < MARGINAL_FLUX_TOL })
    }

    /// Φ/2π with its sign.
    pub fn phi_over_2pi(&self) -> f64 {
        self.phi / (2.0 * PI)
    }

    /// |Φ|/2π.
    pub fn quanta(&self) -> f64 {
        self.phi.abs() / (2.0 * PI)
    }
}

impl FieldProfile {
    pub fn new(kind: FieldKind) -> Result<Self> {
        Self::with_center(kind, [0.0, 0.0])
    }

    pub fn with_center(kind: FieldKind, center: [f64; 2]) -> Result<Self> {
        let profile = Self { kind, center };
        profile.validate()?;
        Ok(profile)
    }

    pub fn uniform_disk(b0: f64, radius: f64) -> Result<Self> {
        Self::new(FieldKind::UniformDisk { b0, radius })
    }

    pub fn gaussian(b0: f64, sigma: f64) -> Result<Self> {
        Self::new(FieldKind::Gaussian { b0, sigma })
    }

    pub fn uniform_everywhere(b0: f64) -> Result<Self> {
        Self::new(FieldKind::UniformEverywhere { b0 })
    }

    pub fn validate(&self) -> Result<()> {
        let b0 = self.b0();
        if !b0.is_finite() {
            return Err(Error::InvalidProfile(format!("B0 must be finite, got {b0}")));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::InvalidProfile("center must be finite".into()));
        }
        match self.kind {
            FieldKind::UniformDisk { radius, .. } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidProfile(format!("disk radius must be positive, got {radius}")))
            }
            FieldKind::Gaussian { sigma, .. } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidProfile(format!("gaussian sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn b0(&self) -> f64 {
        match self.kind {
            FieldKind::UniformDisk { b0, .. }
            | FieldKind::Gaussian { b0, .. }
            | FieldKind::UniformEverywhere { b0 } => b0,
        }
    }

    pub fn unbounded_flux(&self) -> bool {
        matches!(self.kind, FieldKind::UniformEverywhere { .. })
    }

    /// Distance of `(x, y)` from the flux centroid.
    pub fn radius_of(&self, x: f64, y: f64) -> f64 {
        (x - self.center[0]).hypot(y - self.center[1])
    }

    /// Pointwise B(x, y).
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let r = self.radius_of(x, y);
        self.radial(r)
    }

    /// B as a function of the distance from the center.
    pub fn radial(&self, r: f64) -> f64 {
        match self.kind {
            FieldKind::UniformDisk { b0, radius } => {
                if r <= radius {
                    b0
                } else {
                    0.0
                }
            }
            FieldKind::Gaussian { b0, sigma } => b0 * (-(r * r) / (2.0 * sigma * sigma)).exp(),
            FieldKind::UniformEverywhere { b0 } => b0,
        }
    }

    /// Radius of the region carrying the flux: R for the disk, the radius
    /// enclosing 95% of the flux for the Gaussian, infinite for a uniform field.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            FieldKind::UniformDisk { radius, .. } => radius,
            FieldKind::Gaussian { sigma, .. } => sigma * (2.0 * (1.0 / GAUSSIAN_SUPPORT_TAIL).ln()).sqrt(),
            FieldKind::UniformEverywhere { .. } => f64::INFINITY,
        }
    }

    /// Radius at which the field has a jump, if any.
    pub fn discontinuity_radius(&self) -> Option<f64> {
        match self.kind {
            FieldKind::UniformDisk { radius, .. } => Some(radius),
            _ => None,
        }
    }

    /// Average of B over the axis-aligned square cell of side `h` centered at
    /// `(x, y)`. Cells cut by the disk edge are supersampled so the lattice
    /// flux matches the analytic one.
    pub fn cell_average(&self, x: f64, y: f64, h: f64) -> f64 {
        match self.kind {
            FieldKind::UniformDisk { b0, radius } => {
                let r = self.radius_of(x, y);
                let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
                if r + half_diag <= radius {
                    b0
                } else if r - half_diag >= radius {
                    0.0
                } else {
                    const SUB: usize = 48;
                    let step = h / SUB as f64;
                    let mut inside = 0usize;
                    for a in 0..SUB {
                        let sx = x - 0.5 * h + (a as f64 + 0.5) * step;
                        for b in 0..SUB {
                            let sy = y - 0.5 * h + (b as f64 + 0.5) * step;
                            if self.radius_of(sx, sy) <= radius {
                                inside += 1;
                            }
                        }
                    }
                    b0 * inside as f64 / (SUB * SUB) as f64
                }
            }
            FieldKind::Gaussian { .. } => {
                // 4×4 Gauss-Legendre on the cell.
                const NODES: [f64; 4] = [
                    -0.861_136_311_594_052_6,
                    -0.339_981_043_584_856_3,
                    0.339_981_043_584_856_3,
                    0.861_136_311_594_052_6,
                ];
                const WEIGHTS: [f64; 4] = [
                    0.347_854_845_137_453_9,
                    0.652_145_154_862_546_1,
                    0.652_145_154_862_546_1,
                    0.347_854_845_137_453_9,
                ];
                let mut acc = 0.0;
                for (a, wa) in NODES.iter().zip(WEIGHTS) {
                    for (b, wb) in NODES.iter().zip(WEIGHTS) {
                        acc += wa * wb * self.evaluate(x + 0.5 * h * a, y + 0.5 * h * b);
                    }
                }
                acc / 4.0
            }
            FieldKind::UniformEverywhere { b0 } => b0,
        }
    }
}

/// Pointwise field strength.
pub fn evaluate_field(profile: &FieldProfile, x: f64, y: f64) -> f64 {
    profile.evaluate(x, y)
}

/// Analytic total flux (disk: B0πR², Gaussian: 2πB0σ²) and its integer part.
pub fn total_flux(profile: &FieldProfile) -> Result<FluxInfo> {
    let phi = match profile.kind {
        FieldKind::UniformDisk { b0, radius } => b0 * PI * radius * radius,
        FieldKind::Gaussian { b0, sigma } => 2.0 * PI * b0 * sigma * sigma,
        FieldKind::UniformEverywhere { .. } => return Err(Error::UnboundedFlux),
    };
    FluxInfo::from_phi(phi)
}

/// Total flux by adaptive radial quadrature of 2πr·B(r), to relative
/// tolerance `rel_tol`. Independent of the closed forms in [`total_flux`].
pub fn quadrature_flux(profile: &FieldProfile, rel_tol: f64) -> Result<f64> {
    let integrand = |r: f64| 2.0 * PI * r * profile.radial(r);
    let segments: Vec<(f64, f64)> = match profile.kind {
        FieldKind::UniformDisk { radius, .. } => vec![(0.0, radius)],
        FieldKind::Gaussian { sigma, .. } => {
            // Beyond 40σ the integrand is below e^-800.
            (0..8).map(|k| (5.0 * sigma * k as f64, 5.0 * sigma * (k + 1) as f64)).collect()
        }
        FieldKind::UniformEverywhere { .. } => return Err(Error::UnboundedFlux),
    };
    let scale = profile.b0().abs().max(f64::MIN_POSITIVE);
    let total: f64 = segments.iter().map(|&(a, b)| adaptive_simpson(&integrand, a, b, rel_tol * scale, 60)).sum();
    Ok(total)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
