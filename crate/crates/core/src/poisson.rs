//! Fast Dirichlet Poisson solve for the 5-point Laplacian via DST-I.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::{GridSpec, RealGrid};

struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { m, fft: planner.plan_fft_forward(2 * (m + 1)) }
    }

    /// In-place unnormalized DST-I: X_k = Σ_n x_n sin(π(k+1)(n+1)/(m+1)).
    fn apply(&self, row: &mut [f64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let m = self.m;
        buf[0] = Complex64::new(0.0, 0.0);
        buf[m + 1] = Complex64::new(0.0, 0.0);
        for (k, &v) in row.iter().enumerate() {
            buf[k + 1] = Complex64::new(v, 0.0);
            buf[2 * (m + 1) - 1 - k] = Complex64::new(-v, 0.0);
        }
        self.fft.process_with_scratch(buf, scratch);
        for (k, v) in row.iter_mut().enumerate() {
            *v = -0.5 * buf[k + 1].im;
        }
    }

    fn transform_rows(&self, data: &mut [f64]) {
        let m = self.m;
        let scratch_len = self.fft.get_inplace_scratch_len();
        crate::par::for_each_chunk_mut(data, m, |_, row| {
            let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
            let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
            self.apply(row, &mut buf, &mut scratch);
        });
    }
}

fn transpose(src: &[f64], m: usize) -> Vec<f64> {
    crate::par::map_range(m * m, |k| {
        let (i, j) = (k % m, k / m);
        src[i * m + j]
    })
}

/// Solve Δ_h u = f on the interior nodes of `grid`, with u on the boundary
/// nodes taken from `boundary` (its interior values are ignored).
pub fn solve_dirichlet(f: &RealGrid, boundary: &RealGrid) -> RealGrid {
    let spec = f.spec;
    let n = spec.n;
    let m = n - 2;
    let h2 = spec.h * spec.h;
    let mut rhs = vec![0.0; m * m];
    crate::par::fill(&mut rhs, |k| {
        let (a, b) = (k % m, k / m);
        let (i, j) = (a + 1, b + 1);
        let mut v = f.at(i, j);
        if i == 1 {
            v -= boundary.at(0, j) / h2;
        }
        if i == n - 2 {
            v -= boundary.at(n - 1, j) / h2;
        }
        if j == 1 {
            v -= boundary.at(i, 0) / h2;
        }
        if j == n - 2 {
            v -= boundary.at(i, n - 1) / h2;
        }
        v
    });

    let dst = Dst1::new(m);
    dst.transform_rows(&mut rhs);
    let mut t = transpose(&rhs, m);
    dst.transform_rows(&mut t);

    let eig: Vec<f64> = (1..=m)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
            -4.0 * s * s / h2
        })
        .collect();
    // t is indexed [kx * m + ky] after the transpose.
    for (idx, v) in t.iter_mut().enumerate() {
        let (ky, kx) = (idx % m, idx / m);
        *v /= eig[kx] + eig[ky];
    }

    dst.transform_rows(&mut t);
    let mut u = transpose(&t, m);
    dst.transform_rows(&mut u);
    let norm = (2.0 / (m + 1) as f64).powi(2);

    let mut out = boundary.clone();
    for b in 0..m {
        for a in 0..m {
            out.data[spec.index(a + 1, b + 1)] = u[b * m + a] * norm;
        }
    }
    out
}

/// 5-point Laplacian at interior node (i, j).
#[inline]
pub fn laplacian_at(u: &RealGrid, i: usize, j: usize) -> f64 {
    let h2 = u.spec.h * u.spec.h;
    (u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) + u.at(i, j - 1) - 4.0 * u.at(i, j)) / h2
}

/// Nodes of `spec` that lie on the outer boundary.
pub fn is_boundary(spec: &GridSpec, i: usize, j: usize) -> bool {
    i == 0 || j == 0 || i == spec.n - 1 || j == spec.n - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_matches_direct_sum() {
        let m = 7;
        let dst = Dst1::new(m);
        let x: Vec<f64> = (0..m).map(|k| (k as f64 * 0.7).cos() + 0.1 * k as f64).collect();
        let mut y = x.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        let mut scratch = vec![Complex64::new(0.0, 0.0); dst.fft.get_inplace_scratch_len()];
        dst.apply(&mut y, &mut buf, &mut scratch);
        for (k, yk) in y.iter().enumerate() {
            let direct: f64 =
                x.iter().enumerate().map(|(n, xn)| xn * (PI * ((k + 1) * (n + 1)) as f64 / (m + 1) as f64).sin()).sum();
            assert!((yk - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_discrete_solution_exactly() {
        // A field whose discrete Laplacian is computed by the stencil itself.
        let g = GridSpec::new(1.5, 33).unwrap();
        let u = RealGrid::from_fn(g, |x, y| (x * 1.3).sin() * (y - 0.2).cosh() + x * y * y);
        let mut f = RealGrid::zeros(g);
        for j in 1..g.n - 1 {
            for i in 1..g.n - 1 {
                f.data[g.index(i, j)] = laplacian_at(&u, i, j);
            }
        }
        let got = solve_dirichlet(&f, &u);
        let err = got.data.iter().zip(&u.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = GridSpec::new(1.0, 17).unwrap();
        let z = RealGrid::zeros(g);
        let u = solve_dirichlet(&z, &z);
        assert!(u.data.iter().all(|&v| v == 0.0));
    }
}
