//! Partial L² norms N(R) = ∫_{r_in<r<R} |ψ|² dA on growing disks.
//!
//! Quadrature is midpoint in ln r and θ, so power-law densities are
//! integrated with the same relative accuracy on every annulus.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};

/// Increment slopes within this distance of 0 count as logarithmic growth.
pub const LOG_SLOPE_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Convergent,
    Logarithmic,
    PowerDivergent,
}

impl Growth {
    pub fn is_divergent(self) -> bool {
        !matches!(self, Growth::Convergent)
    }

    /// Expected class for a density ~ r^{2ρ}.
    pub fn predicted(rho: f64) -> Self {
        let e = 2.0 * rho + 2.0;
        if e.abs() <= 1e-9 {
            Growth::Logarithmic
        } else if e < 0.0 {
            Growth::Convergent
        } else {
            Growth::PowerDivergent
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Lower limit of the radial integral.
    pub inner_radius: f64,
    /// Midpoint nodes in ln r per annulus.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { inner_radius: 1.0, radial_nodes: 64, angular_nodes: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    /// N(R_{k+1}) − N(R_k).
    pub increments: Vec<f64>,
    /// Slope of log increment against log R between consecutive increments.
    pub local_slopes: Vec<f64>,
    /// Least-squares slope of log increment against log R over all increments.
    pub slope: f64,
    pub growth: Growth,
}

impl NormSeries {
    /// One row per radius.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "radius,norm,increment")?;
        for (k, (r, n)) in self.radii.iter().zip(&self.norms).enumerate() {
            let inc = if k == 0 { String::new() } else { format!("{:.12e}", self.increments[k - 1]) };
            writeln!(w, "{r:.12e},{n:.12e},{inc}")?;
        }
        Ok(())
    }
}

fn annulus<F>(density: &F, r_lo: f64, r_hi: f64, opts: &NormOptions) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let (u0, u1) = (r_lo.ln(), r_hi.ln());
    let du = (u1 - u0) / opts.radial_nodes as f64;
    let dt = 2.0 * PI / opts.angular_nodes as f64;
    let mut acc = 0.0;
    for a in 0..opts.radial_nodes {
        let r = (u0 + (a as f64 + 0.5) * du).exp();
        let mut ring = 0.0;
        for b in 0..opts.angular_nodes {
            let t = (b as f64 + 0.5) * dt;
            ring += density(r * t.cos(), r * t.sin());
        }
        acc += ring * r * r;
    }
    acc * du * dt
}

/// N(R) for every R in `radii`, given the density |ψ|² at (x, y).
pub fn truncated_norms<F>(density: F, radii: &[f64], opts: &NormOptions) -> Result<NormSeries>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    if radii.len() < 3 {
        return Err(Error::InvalidRequest("need at least three radii".into()));
    }
    if opts.inner_radius.is_nan() || opts.inner_radius <= 0.0 || radii[0] <= opts.inner_radius {
        return Err(Error::InvalidRequest("radii must exceed a positive inner radius".into()));
    }
    if radii.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::InvalidRequest("radii must be strictly increasing".into()));
    }
    if opts.radial_nodes == 0 || opts.angular_nodes == 0 {
        return Err(Error::InvalidRequest("quadrature node counts must be positive".into()));
    }
    let edges: Vec<f64> = std::iter::once(opts.inner_radius).chain(radii.iter().copied()).collect();
    let pieces = crate::par::map_range(radii.len(), |k| annulus(&density, edges[k], edges[k + 1], opts));
    let norms: Vec<f64> = pieces
        .iter()
        .scan(0.0, |s, p| {
            *s += p;
            Some(*s)
        })
        .collect();
    let increments: Vec<f64> = pieces[1..].to_vec();
    // Each increment sits at the geometric mid-radius of its annulus.
    let mids: Vec<f64> = (1..radii.len()).map(|k| (radii[k - 1] * radii[k]).sqrt().ln()).collect();
    let logs: Vec<f64> = increments.iter().map(|v| v.abs().max(f64::MIN_POSITIVE).ln()).collect();
    let local_slopes: Vec<f64> = (1..logs.len()).map(|k| (logs[k] - logs[k - 1]) / (mids[k] - mids[k - 1])).collect();
    let slope = least_squares_slope(&mids, &logs);
    let growth = classify(slope);
    Ok(NormSeries { radii: radii.to_vec(), norms, increments, local_slopes, slope, growth })
}

/// Slopes are meaningful for geometric radii, see [`geometric_radii`].
fn classify(slope: f64) -> Growth {
    if slope < -LOG_SLOPE_TOL {
        Growth::Convergent
    } else if slope <= LOG_SLOPE_TOL {
        Growth::Logarithmic
    } else {
        Growth::PowerDivergent
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `count` radii from `r_min` to `r_max` in geometric progression.
pub fn geometric_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    let q = (r_max / r_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|k| r_min * q.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_slope() {
        let radii = geometric_radii(2.0, 200.0, 12);
        let rho: f64 = -1.5;
        let s = truncated_norms(|x, y| x.hypot(y).powf(2.0 * rho), &radii, &NormOptions::default()).unwrap();
        assert!((s.slope - (2.0 * rho + 2.0)).abs() < 0.05, "slope {}", s.slope);
        assert_eq!(s.growth, Growth::Convergent);
        // Closed form: ∫ r^{-3}·r dr dθ = 2π(1/r_in − 1/R).
        let exact = 2.0 * PI * (1.0 - 1.0 / 200.0);
        assert!((s.norms.last().unwrap() - exact).abs() < 1e-5 * exact, "{} vs {exact}", s.norms.last().unwrap());
    }

    #[test]
    fn marginal_is_logarithmic() {
        let radii = geometric_radii(2.0, 2000.0, 12);
        let s = truncated_norms(|x, y| 1.0 / (x * x + y * y), &radii, &NormOptions::default()).unwrap();
        assert_eq!(s.growth, Growth::Logarithmic);
        let exact = 2.0 * PI * 2000.0f64.ln();
        assert!((s.norms.last().unwrap() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn gaussian_saturates_faster_than_any_power() {
        let radii = geometric_radii(1.5, 8.0, 10);
        let s = truncated_norms(|x, y| (-(x * x + y * y) / 2.0).exp(), &radii, &NormOptions::default()).unwrap();
        assert_eq!(s.growth, Growth::Convergent);
        assert!(s.local_slopes.windows(2).all(|w| w[1] < w[0]));
        assert!(*s.local_slopes.last().unwrap() < -20.0);
    }

    #[test]
    fn rejects_unordered_radii() {
        assert!(truncated_norms(|_, _| 1.0, &[3.0, 2.0, 4.0], &NormOptions::default()).is_err());
    }

    #[test]
    fn predicted_class() {
        assert_eq!(Growth::predicted(-1.0), Growth::Logarithmic);
        assert_eq!(Growth::predicted(-1.5), Growth::Convergent);
        assert_eq!(Growth::predicted(-0.5), Growth::PowerDivergent);
    }
}
