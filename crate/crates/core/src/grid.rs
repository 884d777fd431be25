//! Square node grids on [−L, L]² and the flat grid file format.
//!
//! Node (i, j) sits at x = −L + i·h, y = −L + j·h and is stored at index
//! `j·n + i`.
//!
//! A grid file is one JSON header line followed by the payload:
//!
//! ```text
//! {"format":"fluxdirac-grid","version":1,"L":8.0,"n":256,"phi":6.28..,"r0":1.0,"fields":["lambda"],"encoding":"text"}
//! <n² values of field 0>
//! <n² values of field 1>
//! ...
//! ```
//!
//! Text payloads hold one `{:.16e}` value per line, binary payloads n² little-endian
//! f64 per field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const GRID_FORMAT: &str = "fluxdirac-grid";
pub const GRID_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
}

impl GridSpec {
    /// Grid with `n` nodes per side on [−L, L]². `n ≥ 3` is accepted here;
    /// solvers that need the asymptotic zone impose their own minimum.
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes per side, got {n}")));
        }
        Ok(Self { half_width, n, h: 2.0 * half_width / (n - 1) as f64 })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords_of(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords_of(idx);
        (self.x(i), self.x(j))
    }

    /// Nodes no closer than `band` nodes to any edge.
    #[inline]
    pub fn is_interior(&self, i: usize, j: usize, band: usize) -> bool {
        i >= band && j >= band && i + band < self.n && j + band < self.n
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let l = self.half_width * (1.0 + 1e-12);
        x.abs() <= l && y.abs() <= l
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(L={}, n={}) vs (L={}, n={})",
                self.half_width, self.n, other.half_width, other.n
            )))
        }
    }

    /// Cell index and fractional offset for bilinear interpolation along one axis.
    fn locate(&self, x: f64) -> (usize, f64) {
        let t = ((x + self.half_width) / self.h).clamp(0.0, (self.n - 1) as f64);
        let i = (t.floor() as usize).min(self.n - 2);
        (i, t - i as f64)
    }
}

macro_rules! grid_type {
    ($name:ident, $elem:ty, $zero:expr) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub spec: GridSpec,
            pub data: Vec<$elem>,
        }

        impl $name {
            pub fn zeros(spec: GridSpec) -> Self {
                Self { spec, data: vec![$zero; spec.len()] }
            }

            pub fn from_vec(spec: GridSpec, data: Vec<$elem>) -> Result<Self> {
                if data.len() != spec.len() {
                    return Err(Error::GridMismatch(format!(
                        "{} values for an {}×{} grid",
                        data.len(),
                        spec.n,
                        spec.n
                    )));
                }
                Ok(Self { spec, data })
            }

            /// Sample `f(x, y)` at every node.
            pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
            where
                F: Fn(f64, f64) -> $elem + Sync + Send,
            {
                let mut data = vec![$zero; spec.len()];
                crate::par::fill(&mut data, |idx| {
                    let (x, y) = spec.point(idx);
                    f(x, y)
                });
                Self { spec, data }
            }

            #[inline]
            pub fn at(&self, i: usize, j: usize) -> $elem {
                self.data[self.spec.index(i, j)]
            }

            /// Bilinear interpolation; points outside the domain are an error.
            pub fn interpolate(&self, x: f64, y: f64) -> Result<$elem> {
                if !self.spec.contains(x, y) {
                    return Err(Error::OutOfDomain { x, y });
                }
                let (i, fx) = self.spec.locate(x);
                let (j, fy) = self.spec.locate(y);
                let v00 = self.at(i, j);
                let v10 = self.at(i + 1, j);
                let v01 = self.at(i, j + 1);
                let v11 = self.at(i + 1, j + 1);
                Ok(v00 * ((1.0 - fx) * (1.0 - fy))
                    + v10 * (fx * (1.0 - fy))
                    + v01 * ((1.0 - fx) * fy)
                    + v11 * (fx * fy))
            }
        }
    };
}

grid_type!(RealGrid, f64, 0.0);
grid_type!(ComplexGrid, Complex64, Complex64::new(0.0, 0.0));

impl RealGrid {
    pub fn max_abs(&self) -> f64 {
        crate::par::fixed_max(self.data.len(), |k| self.data[k].abs())
    }
}

impl ComplexGrid {
    pub fn max_abs(&self) -> f64 {
        crate::par::fixed_max(self.data.len(), |k| self.data[k].norm())
    }

    pub fn real_part(&self) -> RealGrid {
        RealGrid { spec: self.spec, data: self.data.iter().map(|z| z.re).collect() }
    }

    pub fn imag_part(&self) -> RealGrid {
        RealGrid { spec: self.spec, data: self.data.iter().map(|z| z.im).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Text,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    /// Total flux; null for a field filling the plane.
    pub phi: Option<f64>,
    pub r0: f64,
    pub fields: Vec<String>,
    pub encoding: Encoding,
}

impl GridHeader {
    pub fn new(spec: &GridSpec, phi: Option<f64>, r0: f64, fields: Vec<String>, encoding: Encoding) -> Self {
        Self {
            format: GRID_FORMAT.into(),
            version: GRID_FORMAT_VERSION,
            half_width: spec.half_width,
            n: spec.n,
            phi,
            r0,
            fields,
            encoding,
        }
    }
}

/// Write named real fields sharing one grid.
pub fn write_grid<W: Write>(mut w: W, header: &GridHeader, fields: &[&RealGrid]) -> Result<()> {
    if header.fields.len() != fields.len() {
        return Err(Error::GridFormat(format!(
            "header names {} fields, {} supplied",
            header.fields.len(),
            fields.len()
        )));
    }
    let spec = GridSpec::new(header.half_width, header.n)?;
    for f in fields {
        spec.check_same(&f.spec)?;
    }
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    match header.encoding {
        Encoding::Text => {
            for f in fields {
                for v in &f.data {
                    writeln!(w, "{v:.16e}")?;
                }
            }
        }
        Encoding::Binary => {
            for f in fields {
                let mut buf = Vec::with_capacity(8 * f.data.len());
                for v in &f.data {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid<R: BufRead>(mut r: R) -> Result<(GridHeader, Vec<RealGrid>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: GridHeader = serde_json::from_str(line.trim_end())?;
    if header.format != GRID_FORMAT {
        return Err(Error::GridFormat(format!("unknown format tag {:?}", header.format)));
    }
    if header.version != GRID_FORMAT_VERSION {
        return Err(Error::GridFormat(format!("unsupported version {}", header.version)));
    }
    let spec = GridSpec::new(header.half_width, header.n)?;
    let count = spec.len();
    let mut grids = Vec::with_capacity(header.fields.len());
    match header.encoding {
        Encoding::Text => {
            let mut lines = r.lines();
            for name in &header.fields {
                let mut data = Vec::with_capacity(count);
                for _ in 0..count {
                    let l = lines.next().ok_or_else(|| Error::GridFormat(format!("field {name} is truncated")))??;
                    let v: f64 = l.trim().parse().map_err(|e| Error::GridFormat(format!("field {name}: {e}")))?;
                    data.push(v);
                }
                grids.push(RealGrid { spec, data });
            }
        }
        Encoding::Binary => {
            let mut buf = vec![0u8; 8 * count];
            for name in &header.fields {
                r.read_exact(&mut buf).map_err(|e| Error::GridFormat(format!("field {name}: {e}")))?;
                let data =
                    buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
                grids.push(RealGrid { spec, data });
            }
        }
    }
    Ok((header, grids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spacing_and_coordinates() {
        let g = GridSpec::new(8.0, 257).unwrap();
        assert!((g.h - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(g.point(0), (-8.0, -8.0));
        let last = g.point(g.len() - 1);
        assert!((last.0 - 8.0).abs() < 1e-12 && (last.1 - 8.0).abs() < 1e-12);
        assert_eq!(g.coords_of(g.index(5, 7)), (5, 7));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(1.0, 2).is_err());
        assert!(GridSpec::new(0.0, 10).is_err());
    }

    #[test]
    fn bilinear_is_exact_on_bilinear_functions() {
        let g = GridSpec::new(2.0, 11).unwrap();
        let f = RealGrid::from_fn(g, |x, y| 1.0 + 2.0 * x - 0.5 * y + 0.25 * x * y);
        for &(x, y) in &[(0.13, -1.7), (1.99, 2.0), (-2.0, -2.0), (0.0, 0.31)] {
            let v = f.interpolate(x, y).unwrap();
            assert!((v - (1.0 + 2.0 * x - 0.5 * y + 0.25 * x * y)).abs() < 1e-12);
        }
        assert!(matches!(f.interpolate(2.5, 0.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn binary_round_trip() {
        let g = GridSpec::new(3.0, 9).unwrap();
        let a = RealGrid::from_fn(g, |x, y| x.sin() * y.exp());
        let b = RealGrid::from_fn(g, |x, y| x - y);
        let h = GridHeader::new(&g, Some(1.5), 1.0, vec!["a".into(), "b".into()], Encoding::Binary);
        let mut buf = Vec::new();
        write_grid(&mut buf, &h, &[&a, &b]).unwrap();
        let (h2, grids) = read_grid(buf.as_slice()).unwrap();
        assert_eq!(h, h2);
        assert_eq!(grids[0], a);
        assert_eq!(grids[1], b);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = GridSpec::new(1.0, 4).unwrap();
        let a = RealGrid::zeros(g);
        let h = GridHeader::new(&g, Some(0.0), 1.0, vec!["a".into()], Encoding::Text);
        let mut buf = Vec::new();
        write_grid(&mut buf, &h, &[&a]).unwrap();
        buf.truncate(buf.len() - 30);
        assert!(read_grid(buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_lossless(vals in proptest::collection::vec(-1e6f64..1e6, 16), l in 0.1f64..100.0) {
            let g = GridSpec::new(l, 4).unwrap();
            let a = RealGrid::from_vec(g, vals).unwrap();
            let h = GridHeader::new(&g, None, 1.0, vec!["lambda".into()], Encoding::Text);
            let mut buf = Vec::new();
            write_grid(&mut buf, &h, &[&a]).unwrap();
            let (h2, grids) = read_grid(buf.as_slice()).unwrap();
            prop_assert_eq!(h2, h);
            prop_assert_eq!(&grids[0], &a);
        }
    }
}
