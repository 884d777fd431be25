use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, GridSpec};

/// Two complex grids (ψ_a, ψ_b).
///
/// The flat layout used by the operator and the sparse matrix interleaves
/// components: unknown `2·site + c`, c = 0 for ψ_a.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpinor {
    pub upper: ComplexGrid,
    pub lower: ComplexGrid,
}

impl GridSpinor {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { upper: ComplexGrid::zeros(spec), lower: ComplexGrid::zeros(spec) }
    }

    pub fn new(upper: ComplexGrid, lower: ComplexGrid) -> Result<Self> {
        upper.spec.check_same(&lower.spec)?;
        Ok(Self { upper, lower })
    }

    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> (Complex64, Complex64) + Sync + Send,
    {
        let upper = ComplexGrid::from_fn(spec, |x, y| f(x, y).0);
        let lower = ComplexGrid::from_fn(spec, |x, y| f(x, y).1);
        Self { upper, lower }
    }

    pub fn spec(&self) -> GridSpec {
        self.upper.spec
    }

    pub fn check_finite(&self) -> Result<()> {
        let ok = self.upper.data.iter().chain(&self.lower.data).all(|z| z.re.is_finite() && z.im.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRequest("spinor has non-finite entries".into()))
        }
    }

    /// h²·Σ(|ψ_a|² + |ψ_b|²).
    pub fn norm_sqr(&self) -> f64 {
        let h2 = self.spec().h.powi(2);
        let n = self.upper.data.len();
        h2 * crate::par::fixed_sum(n, |k| self.upper.data[k].norm_sqr() + self.lower.data[k].norm_sqr())
    }

    /// Same as [`norm_sqr`](Self::norm_sqr) restricted to nodes at least
    /// `band` nodes from the boundary.
    pub fn interior_norm_sqr(&self, band: usize) -> f64 {
        let g = self.spec();
        let h2 = g.h * g.h;
        h2 * crate::par::fixed_sum(g.len(), |k| {
            let (i, j) = g.coords_of(k);
            if g.is_interior(i, j, band) {
                self.upper.data[k].norm_sqr() + self.lower.data[k].norm_sqr()
            } else {
                0.0
            }
        })
    }

    pub fn to_interleaved(&self) -> Vec<Complex64> {
        let n = self.upper.data.len();
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * n];
        for k in 0..n {
            v[2 * k] = self.upper.data[k];
            v[2 * k + 1] = self.lower.data[k];
        }
        v
    }

    pub fn from_interleaved(spec: GridSpec, v: &[Complex64]) -> Result<Self> {
        if v.len() != 2 * spec.len() {
            return Err(Error::GridMismatch(format!("{} unknowns for {} sites", v.len(), spec.len())));
        }
        let upper = ComplexGrid { spec, data: v.iter().step_by(2).copied().collect() };
        let lower = ComplexGrid { spec, data: v.iter().skip(1).step_by(2).copied().collect() };
        Ok(Self { upper, lower })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_round_trip_and_norm() {
        let g = GridSpec::new(1.0, 5).unwrap();
        let s = GridSpinor::from_fn(g, |x, y| (Complex64::new(x, y), Complex64::new(1.0, -x * y)));
        let v = s.to_interleaved();
        assert_eq!(v[2], s.upper.data[1]);
        assert_eq!(GridSpinor::from_interleaved(g, &v).unwrap(), s);
        let direct: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.h * g.h;
        assert!((s.norm_sqr() - direct).abs() < 1e-12);
    }
}
