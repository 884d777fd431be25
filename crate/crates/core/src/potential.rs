//! The auxiliary potential λ (∇²λ = B), the gauge A = (−∂_yλ, ∂_xλ), and the
//! checks tying them back to the field and to λ ≈ (Φ/2π)·ln(r/r₀).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{total_flux, FieldKind, FieldProfile};
use crate::grid::{write_grid, Encoding, GridHeader, GridSpec, RealGrid};
use crate::poisson;

pub const DEFAULT_R0: f64 = 1.0;
/// Smallest grid accepted by [`solve_lambda`].
pub const MIN_SOLVE_NODES: usize = 64;
/// Nodes required inside the asymptotic fitting zone.
pub const MIN_ZONE_NODES: usize = 100;
/// Fitting zone as fractions of L.
pub const ZONE: (f64, f64) = (0.6, 0.9);
/// Band (in units of h) around a field jump excluded from pointwise checks.
pub const JUMP_BAND: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMethod {
    /// DST Poisson solve with Dirichlet data from the asymptote.
    #[default]
    FastPoisson,
    /// Direct quadrature of (1/2π)∫ln(|r−r′|/r₀)B(r′)dr′. O(n⁴); small grids only.
    GreenQuadrature,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuxPotential {
    pub grid_lambda: RealGrid,
    /// Φ/2π; `None` for a field filling the whole plane.
    pub asymptotic_coeff: Option<f64>,
    pub r0: f64,
    pub profile_ref: FieldProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeField {
    pub ax: RealGrid,
    pub ay: RealGrid,
}

impl GaugeField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { ax: RealGrid::zeros(spec), ay: RealGrid::zeros(spec) }
    }

    pub fn spec(&self) -> GridSpec {
        self.ax.spec
    }

    /// Max over interior nodes of the central-difference divergence.
    pub fn divergence_max(&self) -> f64 {
        let g = self.spec();
        let inv = 0.5 / g.h;
        crate::par::fixed_max(g.len(), |k| {
            let (i, j) = g.coords_of(k);
            if !g.is_interior(i, j, 1) {
                return 0.0;
            }
            let d = (self.ax.at(i + 1, j) - self.ax.at(i - 1, j)) * inv
                + (self.ay.at(i, j + 1) - self.ay.at(i, j - 1)) * inv;
            d.abs()
        })
    }

    pub fn write_to<W: Write>(&self, w: W, phi: Option<f64>, r0: f64, encoding: Encoding) -> Result<()> {
        let header = GridHeader::new(&self.spec(), phi, r0, vec!["ax".into(), "ay".into()], encoding);
        write_grid(w, &header, &[&self.ax, &self.ay])
    }
}

impl AuxPotential {
    pub fn spec(&self) -> GridSpec {
        self.grid_lambda.spec
    }

    /// λ sampled from the closed-form disk solution in the Green's-function gauge.
    pub fn from_closed_form(profile: &FieldProfile, spec: GridSpec, r0: f64) -> Result<Self> {
        let FieldKind::UniformDisk { b0, radius } = profile.kind else {
            return Err(Error::InvalidProfile("closed-form λ exists only for the uniform disk".into()));
        };
        let p = *profile;
        let grid_lambda =
            RealGrid::from_fn(spec, move |x, y| lambda_closed_form_disk_green(b0, radius, p.radius_of(x, y), r0));
        Ok(Self { grid_lambda, asymptotic_coeff: Some(total_flux(profile)?.phi_over_2pi()), r0, profile_ref: *profile })
    }

    /// λ = B0·r²/4 for a field filling the plane.
    pub fn uniform(profile: &FieldProfile, spec: GridSpec) -> Result<Self> {
        let FieldKind::UniformEverywhere { b0 } = profile.kind else {
            return Err(Error::InvalidProfile("uniform λ needs a uniform_everywhere profile".into()));
        };
        let p = *profile;
        let grid_lambda = RealGrid::from_fn(spec, move |x, y| {
            let r = p.radius_of(x, y);
            0.25 * b0 * r * r
        });
        Ok(Self { grid_lambda, asymptotic_coeff: None, r0: DEFAULT_R0, profile_ref: *profile })
    }

    pub fn write_to<W: Write>(&self, w: W, encoding: Encoding) -> Result<()> {
        let phi = self.asymptotic_coeff.map(|a| 2.0 * PI * a);
        let header = GridHeader::new(&self.spec(), phi, self.r0, vec!["lambda".into()], encoding);
        write_grid(w, &header, &[&self.grid_lambda])
    }
}

/// λ for a uniform disk, gauge λ(0) = 0.
pub fn lambda_closed_form_disk(b0: f64, radius: f64, r: f64) -> f64 {
    if r <= radius {
        0.25 * b0 * r * r
    } else {
        0.5 * b0 * radius * radius * (r / radius).ln() + 0.25 * b0 * radius * radius
    }
}

/// λ for a uniform disk in the gauge of the Green's-function integral, where
/// λ = (Φ/2π)·ln(r/r₀) holds exactly outside the disk.
pub fn lambda_closed_form_disk_green(b0: f64, radius: f64, r: f64, r0: f64) -> f64 {
    let r2 = radius * radius;
    lambda_closed_form_disk(b0, radius, r) + 0.5 * b0 * r2 * (radius / r0).ln() - 0.25 * b0 * r2
}

fn check_domain(profile: &FieldProfile, spec: &GridSpec) -> Result<f64> {
    let flux = total_flux(profile)?;
    let offset = profile.center[0].abs().max(profile.center[1].abs());
    let support = profile.support_radius() + offset;
    let limit = spec.half_width / 3.0;
    if support > limit {
        return Err(Error::SupportTooLarge { support, limit });
    }
    if spec.n < MIN_SOLVE_NODES {
        return Err(Error::InvalidGrid(format!(
            "λ solve needs at least {MIN_SOLVE_NODES} nodes per side, got {}",
            spec.n
        )));
    }
    Ok(flux.phi_over_2pi())
}

/// Cell-averaged field on the node grid.
pub fn sample_field(profile: &FieldProfile, spec: GridSpec) -> RealGrid {
    let p = *profile;
    let h = spec.h;
    RealGrid::from_fn(spec, move |x, y| p.cell_average(x, y, h))
}

pub fn solve_lambda(profile: &FieldProfile, spec: GridSpec) -> Result<AuxPotential> {
    solve_lambda_with(profile, spec, LambdaMethod::FastPoisson, DEFAULT_R0)
}

pub fn solve_lambda_with(
    profile: &FieldProfile,
    spec: GridSpec,
    method: LambdaMethod,
    r0: f64,
) -> Result<AuxPotential> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidGrid(format!("r0 must be positive, got {r0}")));
    }
    let a = check_domain(profile, &spec)?;
    let b = sample_field(profile, spec);
    let grid_lambda = match method {
        LambdaMethod::FastPoisson => {
            let p = *profile;
            let boundary = RealGrid::from_fn(spec, move |x, y| {
                let r = p.radius_of(x, y);
                if a == 0.0 {
                    0.0
                } else {
                    a * (r / r0).ln()
                }
            });
            poisson::solve_dirichlet(&b, &boundary)
        }
        LambdaMethod::GreenQuadrature => green_quadrature(&b, r0),
    };
    Ok(AuxPotential { grid_lambda, asymptotic_coeff: Some(a), r0, profile_ref: *profile })
}

/// Mean of ln|r| over the square [−a, a]² is ln a + this constant.
const SQUARE_LOG_MEAN: f64 = -0.368_028_246_322_579;

fn green_quadrature(b: &RealGrid, r0: f64) -> RealGrid {
    let spec = b.spec;
    let h = spec.h;
    let cell = h * h;
    let sources: Vec<(f64, f64, f64)> = (0..spec.len())
        .filter(|&k| b.data[k] != 0.0)
        .map(|k| {
            let (x, y) = spec.point(k);
            (x, y, b.data[k] * cell)
        })
        .collect();
    let self_log = (0.5 * h).ln() + SQUARE_LOG_MEAN;
    let ln_r0 = r0.ln();
    let mut out = RealGrid::zeros(spec);
    crate::par::fill(&mut out.data, |k| {
        let (x, y) = spec.point(k);
        let mut acc = 0.0;
        for &(sx, sy, w) in &sources {
            let d2 = (x - sx) * (x - sx) + (y - sy) * (y - sy);
            let l = if d2 < 0.25 * cell { self_log } else { 0.5 * d2.ln() };
            acc += w * (l - ln_r0);
        }
        acc / (2.0 * PI)
    });
    out
}

fn one_sided(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
}

fn d_dx(u: &RealGrid, i: usize, j: usize) -> f64 {
    let g = u.spec;
    let n = g.n;
    if i == 0 {
        one_sided(u.at(0, j), u.at(1, j), u.at(2, j), g.h)
    } else if i == n - 1 {
        -one_sided(u.at(n - 1, j), u.at(n - 2, j), u.at(n - 3, j), g.h)
    } else if i == 1 || i == n - 2 {
        (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * g.h)
    } else {
        central4(u.at(i - 2, j), u.at(i - 1, j), u.at(i + 1, j), u.at(i + 2, j), g.h)
    }
}

fn d_dy(u: &RealGrid, i: usize, j: usize) -> f64 {
    let g = u.spec;
    let n = g.n;
    if j == 0 {
        one_sided(u.at(i, 0), u.at(i, 1), u.at(i, 2), g.h)
    } else if j == n - 1 {
        -one_sided(u.at(i, n - 1), u.at(i, n - 2), u.at(i, n - 3), g.h)
    } else if j == 1 || j == n - 2 {
        (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * g.h)
    } else {
        central4(u.at(i, j - 2), u.at(i, j - 1), u.at(i, j + 1), u.at(i, j + 2), g.h)
    }
}

#[inline]
fn central4(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

/// A_x = −∂_yλ, A_y = ∂_xλ by central differences: fourth order in the
/// interior, second order next to the boundary, one-sided second order on it.
pub fn gauge_from_lambda(aux: &AuxPotential) -> GaugeField {
    gauge_from_grid(&aux.grid_lambda)
}

pub fn gauge_from_grid(lambda: &RealGrid) -> GaugeField {
    let spec = lambda.spec;
    let mut ax = RealGrid::zeros(spec);
    let mut ay = RealGrid::zeros(spec);
    crate::par::fill(&mut ax.data, |k| {
        let (i, j) = spec.coords_of(k);
        -d_dy(lambda, i, j)
    });
    crate::par::fill(&mut ay.data, |k| {
        let (i, j) = spec.coords_of(k);
        d_dx(lambda, i, j)
    });
    GaugeField { ax, ay }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurlReport {
    pub max_error: f64,
    /// Location of the worst node.
    pub at: [f64; 2],
    pub nodes_checked: usize,
    pub nodes_excluded: usize,
}

fn near_jump(profile: &FieldProfile, x: f64, y: f64, band: f64) -> bool {
    profile.discontinuity_radius().is_some_and(|r| (profile.radius_of(x, y) - r).abs() <= band)
}

/// Max |(∂_xA_y − ∂_yA_x) − B| over interior nodes, skipping a 3h band
/// around field jumps.
pub fn verify_curl(gauge: &GaugeField, profile: &FieldProfile) -> Result<CurlReport> {
    gauge.ax.spec.check_same(&gauge.ay.spec)?;
    let g = gauge.spec();
    let band = JUMP_BAND * g.h;
    let per_node: Vec<Option<f64>> = crate::par::map_range(g.len(), |k| {
        let (i, j) = g.coords_of(k);
        if !g.is_interior(i, j, 1) {
            return None;
        }
        let (x, y) = g.point(k);
        if near_jump(profile, x, y, band) {
            return None;
        }
        let curl = (gauge.ay.at(i + 1, j) - gauge.ay.at(i - 1, j)) / (2.0 * g.h)
            - (gauge.ax.at(i, j + 1) - gauge.ax.at(i, j - 1)) / (2.0 * g.h);
        Some((curl - profile.evaluate(x, y)).abs())
    });
    let mut report = CurlReport { max_error: 0.0, at: [0.0, 0.0], nodes_checked: 0, nodes_excluded: 0 };
    for (k, e) in per_node.iter().enumerate() {
        let (i, j) = g.coords_of(k);
        if !g.is_interior(i, j, 1) {
            continue;
        }
        match e {
            Some(e) => {
                report.nodes_checked += 1;
                if *e > report.max_error {
                    report.max_error = *e;
                    let (x, y) = g.point(k);
                    report.at = [x, y];
                }
            }
            None => report.nodes_excluded += 1,
        }
    }
    Ok(report)
}

/// Max over interior nodes away from field jumps of |Δ_h λ − B|.
pub fn laplacian_residual(aux: &AuxPotential) -> f64 {
    let g = aux.spec();
    let band = JUMP_BAND * g.h;
    let p = aux.profile_ref;
    crate::par::fixed_max(g.len(), |k| {
        let (i, j) = g.coords_of(k);
        if !g.is_interior(i, j, 1) {
            return 0.0;
        }
        let (x, y) = g.point(k);
        if near_jump(&p, x, y, band) {
            return 0.0;
        }
        (poisson::laplacian_at(&aux.grid_lambda, i, j) - p.evaluate(x, y)).abs()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub slope: f64,
    pub intercept: f64,
    /// r₀ with λ = slope·ln(r/r₀); undefined for zero slope.
    pub r0: Option<f64>,
    pub nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
}

/// Least-squares fit of λ against ln r over r ∈ [0.6L, 0.9L].
pub fn fit_asymptote(aux: &AuxPotential) -> Result<AsymptoteFit> {
    let g = aux.spec();
    let (lo, hi) = (ZONE.0 * g.half_width, ZONE.1 * g.half_width);
    let p = aux.profile_ref;
    let mut pts = Vec::new();
    for k in 0..g.len() {
        let (x, y) = g.point(k);
        let r = p.radius_of(x, y);
        if r >= lo && r <= hi {
            pts.push((r.ln(), aux.grid_lambda.data[k]));
        }
    }
    if pts.len() < MIN_ZONE_NODES {
        return Err(Error::ZoneTooSmall { nodes: pts.len(), required: MIN_ZONE_NODES });
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let r0 = (slope != 0.0).then(|| (-intercept / slope).exp());
    Ok(AsymptoteFit { slope, intercept, r0, nodes: pts.len(), r_min: lo, r_max: hi })
}
