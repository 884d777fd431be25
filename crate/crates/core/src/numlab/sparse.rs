use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use super::operator::DiracOperator;
use crate::error::{Error, Result};

pub const DEFAULT_SITE_CAP: usize = 1024 * 1024;

/// Compressed sparse rows, every stored entry explicit (no symmetric
/// half-storage), columns sorted within a row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[Complex64]) -> Complex64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
    }

    /// y = M·x, rows in parallel when the `parallel` feature is on.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        crate::par::fill(y, |r| self.row_dot(r, x));
    }

    /// y = M·x on the calling thread.
    pub fn matvec_sequential(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, v) in y.iter_mut().enumerate() {
            *v = self.row_dot(r, x);
        }
    }

    /// max |M_rc − conj(M_cr)| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        crate::par::fixed_max(self.dim, |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(|(&c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
        })
    }

    pub fn max_diag_imag(&self) -> f64 {
        (0..self.dim).map(|r| self.get(r, r).im.abs()).fold(0.0, f64::max)
    }

    /// M − σI in faer's column-major sparse form.
    pub fn to_faer_shifted(&self, sigma: f64) -> Result<SparseColMat<usize, Complex64>> {
        let mut trip = Vec::with_capacity(self.nnz() + self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut diag_seen = false;
            for (&c, &v) in cols.iter().zip(vals) {
                let v = if c == r {
                    diag_seen = true;
                    v - sigma
                } else {
                    v
                };
                trip.push(Triplet::new(r, c, v));
            }
            if !diag_seen && sigma != 0.0 {
                trip.push(Triplet::new(r, r, Complex64::new(-sigma, 0.0)));
            }
        }
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &trip)
            .map_err(|e| Error::Factorization { sigma, reason: format!("{e:?}") })
    }
}

/// Explicit sparse H for `op`. Fails when the site count exceeds `site_cap`.
pub fn assemble(op: &DiracOperator, site_cap: usize) -> Result<CsrMatrix> {
    let g = op.spec;
    let size = g.len();
    if size > site_cap {
        return Err(Error::CapExceeded { size, cap: site_cap });
    }
    let n = g.n;
    let inv = 0.5 / g.h;
    let ws = 0.5 * op.wilson * g.h;
    let (wd, wo) = (4.0 * ws / (g.h * g.h), -ws / (g.h * g.h));
    let im = Complex64::new(0.0, 1.0);

    let rows: Vec<[Vec<(usize, Complex64)>; 2]> = crate::par::map_range(size, |k| {
        let (i, j) = g.coords_of(k);
        let mut up: Vec<(usize, Complex64)> = Vec::with_capacity(9);
        let mut lo: Vec<(usize, Complex64)> = Vec::with_capacity(9);
        // (neighbour site, link phase, direction: 0 = x, 1 = y, sign of step)
        let mut nb: Vec<(usize, Complex64, u8, f64)> = Vec::with_capacity(4);
        if let Some(u) = op.link_x(k) {
            nb.push((k + 1, u, 0, 1.0));
        }
        if i > 0 {
            nb.push((k - 1, op.link_x(k - 1).expect("interior link").conj(), 0, -1.0));
        }
        if let Some(u) = op.link_y(k) {
            nb.push((k + n, u, 1, 1.0));
        }
        if j > 0 {
            nb.push((k - n, op.link_y(k - n).expect("interior link").conj(), 1, -1.0));
        }
        if ws != 0.0 {
            up.push((2 * k, Complex64::new(wd, 0.0)));
            lo.push((2 * k + 1, Complex64::new(-wd, 0.0)));
        }
        for &(s, u, dir, step) in &nb {
            // ∇ contributes ±u/2h; D₋ = −i∇x − ∇y, D₊ = −i∇x + ∇y.
            let grad = u * (step * inv);
            let (dm, dp) = if dir == 0 { (-im * grad, -im * grad) } else { (-grad, grad) };
            up.push((2 * s + 1, dm));
            lo.push((2 * s, dp));
            if ws != 0.0 {
                up.push((2 * s, u * wo));
                lo.push((2 * s + 1, -u * wo));
            }
        }
        up.sort_by_key(|e| e.0);
        lo.sort_by_key(|e| e.0);
        [up, lo]
    });

    let mut row_ptr = Vec::with_capacity(2 * size + 1);
    let mut col_idx = Vec::with_capacity(18 * size);
    let mut values = Vec::with_capacity(18 * size);
    row_ptr.push(0);
    for pair in rows {
        for row in pair {
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(CsrMatrix { dim: 2 * size, row_ptr, col_idx, values })
}
