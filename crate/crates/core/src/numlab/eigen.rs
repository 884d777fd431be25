//! Interior eigenpairs of H by shift-invert block subspace iteration.
//!
//! For each target σ, H − σ is factored once (sparse LU); the block is
//! iterated through (H − σ)⁻¹, orthonormalized, and Rayleigh-Ritz extracts
//! the pairs nearest σ. Inside each near-degenerate group the basis is then
//! rotated to diagonalize the localization projector, so that counts of
//! localized states do not depend on the arbitrary basis the solver lands in.

use faer::prelude::*;
use faer::{Mat, Par, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::operator::DiracOperator;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const MAX_EIG_COUNT: usize = 200;
pub const DEFAULT_LEAK_THRESHOLD: f64 = 0.2;
pub const DEFAULT_DOUBLER_THRESHOLD: f64 = 0.25;
/// Ritz pairs whose residual stops improving are accepted up to this residual.
pub const STAGNATION_RESIDUAL_CAP: f64 = 1e-3;
const SHIFT_OFFSET: f64 = 1e-6;
const STALL_WINDOW: usize = 10;

/// Where a state must live to count as localized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Disk of this radius around `center`.
    Disk { center: [f64; 2], radius: f64 },
    /// Everything except the outer third of the box, max(|x|, |y|) ≤ 2L/3.
    InnerBox,
}

impl Region {
    fn contains(&self, spec: &GridSpec, x: f64, y: f64) -> bool {
        match *self {
            Region::Disk { center, radius } => (x - center[0]).hypot(y - center[1]) < radius,
            Region::InnerBox => !in_outer_third(spec, x, y),
        }
    }
}

fn in_outer_third(spec: &GridSpec, x: f64, y: f64) -> bool {
    x.abs().max(y.abs()) > 2.0 * spec.half_width / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    /// Pairs per target.
    pub k: usize,
    pub targets: Vec<f64>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Cluster tolerance in energy units.
    pub cluster_tol: f64,
    pub region: Region,
    pub leak_threshold: f64,
    pub doubler_threshold: f64,
}

impl SpectrumRequest {
    /// Defaults: tolerance 0.05·√(2|B|), region from the caller.
    pub fn new(k: usize, targets: Vec<f64>, field_abs: f64, region: Region) -> Self {
        Self {
            k,
            targets,
            seed: 0,
            max_iter: 300,
            tol: 1e-8,
            cluster_tol: default_cluster_tol(field_abs),
            region,
            leak_threshold: DEFAULT_LEAK_THRESHOLD,
            doubler_threshold: DEFAULT_DOUBLER_THRESHOLD,
        }
    }
}

pub fn default_cluster_tol(field_abs: f64) -> f64 {
    0.05 * (2.0 * field_abs).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub energy: f64,
    pub residual: f64,
    pub target: f64,
    /// Norm fraction inside the localization region.
    pub localization: f64,
    /// Norm fraction in the outer third of the box.
    pub outer_leak: f64,
    pub high_momentum: f64,
    pub doubler: bool,
    /// Kept for cluster counts: leak within threshold and not a doubler.
    pub retained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub count: usize,
    pub localization: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetDiagnostics {
    pub target: f64,
    pub iterations: usize,
    pub max_residual: f64,
    /// Accepted by the stagnation rule rather than by `tol`.
    pub stagnated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub half_width: f64,
    pub n: usize,
    pub wilson: f64,
    pub k: usize,
    pub targets: Vec<f64>,
    pub seed: u64,
    pub cluster_tol: f64,
    pub region: Region,
    pub leak_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub pairs: Vec<Eigenpair>,
    pub clusters: Vec<Cluster>,
    pub diagnostics: Vec<TargetDiagnostics>,
    pub doubler_warning: bool,
    /// max |Im⟨v, Hv⟩| over returned vectors.
    pub max_imag: f64,
    pub params: SpectrumParams,
}

impl SpectrumReport {
    pub fn retained_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.retained).count()
    }

    /// Retained pairs with |E| ≤ e_max and localization ≥ loc_min.
    pub fn count_localized(&self, e_max: f64, loc_min: f64) -> usize {
        self.pairs.iter().filter(|p| p.retained && p.energy.abs() <= e_max && p.localization >= loc_min).count()
    }

    /// Cluster whose center is nearest `e`.
    pub fn nearest_cluster(&self, e: f64) -> Option<&Cluster> {
        self.clusters.iter().min_by(|a, b| (a.center - e).abs().total_cmp(&(b.center - e).abs()))
    }

    /// One row per eigenpair.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,energy,residual,target,localization,outer_leak,high_momentum,doubler,retained")?;
        for (k, p) in self.pairs.iter().enumerate() {
            writeln!(
                w,
                "{k},{:.12e},{:.3e},{},{:.6},{:.6},{:.6},{},{}",
                p.energy, p.residual, p.target, p.localization, p.outer_leak, p.high_momentum, p.doubler, p.retained
            )?;
        }
        Ok(())
    }
}

struct TargetResult {
    vecs: Mat<Complex64>,
    theta: Vec<f64>,
    residuals: Vec<f64>,
    diag: TargetDiagnostics,
}

/// Rayleigh quotients and relative residuals of the first `k` columns.
fn ritz_values(h: &faer::sparse::SparseColMat<usize, Complex64>, v: &Mat<Complex64>, k: usize) -> (Vec<f64>, Vec<f64>) {
    let hv = h * v;
    let mut theta = vec![0.0; v.ncols()];
    let mut res = vec![0.0; k];
    for c in 0..v.ncols() {
        let mut num = Complex64::new(0.0, 0.0);
        let mut n2 = 0.0;
        for r in 0..v.nrows() {
            num += v[(r, c)].conj() * hv[(r, c)];
            n2 += v[(r, c)].norm_sqr();
        }
        theta[c] = num.re / n2;
        if c < k {
            let r2: f64 = (0..v.nrows()).map(|r| (hv[(r, c)] - v[(r, c)] * theta[c]).norm_sqr()).sum();
            res[c] = (r2 / n2).sqrt();
        }
    }
    (theta, res)
}

fn solve_target(
    m: &CsrMatrix,
    h: &faer::sparse::SparseColMat<usize, Complex64>,
    sigma: f64,
    req: &SpectrumRequest,
    rng: &mut ChaCha8Rng,
) -> Result<TargetResult> {
    let dim = m.dim;
    let k = req.k;
    let bs = (k + (k / 2).max(4)).min(dim);
    // An exact eigenvalue at σ makes H − σ singular; factor slightly off it.
    let pole = sigma + SHIFT_OFFSET * sigma.abs().max(1.0);
    let shifted = m.to_faer_shifted(pole)?;
    let lu = shifted.sp_lu().map_err(|e| Error::Factorization { sigma, reason: format!("{e:?}") })?;
    let mut x =
        Mat::<Complex64>::from_fn(dim, bs, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut history: Vec<f64> = Vec::with_capacity(req.max_iter);
    let mut last = None;
    for it in 1..=req.max_iter {
        // Ritz extraction on (H − σ)⁻¹: mixtures of states on opposite sides
        // of σ get small |μ| instead of a spurious Ritz value near σ.
        let q = x.qr().compute_thin_Q();
        let z = lu.solve(&q);
        let t = q.adjoint() * &z;
        let t = Mat::<Complex64>::from_fn(bs, bs, |r, c| (t[(r, c)] + t[(c, r)].conj()) * 0.5);
        let eig = t.self_adjoint_eigen(Side::Lower).map_err(|_| Error::ConvergenceFailure {
            iterations: it,
            residual: f64::NAN,
            tolerance: req.tol,
        })?;
        let mu: Vec<f64> = (0..bs).map(|i| eig.S().column_vector()[i].re).collect();
        let mut order: Vec<usize> = (0..bs).collect();
        order.sort_by(|&a, &b| mu[b].abs().total_cmp(&mu[a].abs()).then(a.cmp(&b)));
        let u = eig.U();
        let uo = Mat::<Complex64>::from_fn(bs, bs, |r, c| u[(r, order[c])]);
        let vecs = &q * &uo;
        let (theta, res) = ritz_values(h, &vecs, k);
        let max_res = res.iter().copied().fold(0.0, f64::max);
        let scale = 1.0f64.max(sigma.abs());
        history.push(max_res);
        let done = max_res <= req.tol * scale;
        // Near-degenerate groups plateau: stop once a window brings < 10% gain.
        let stalled =
            it > STALL_WINDOW && max_res >= 0.9 * history[it - 1 - STALL_WINDOW] && max_res <= STAGNATION_RESIDUAL_CAP;
        if done || stalled || it == req.max_iter {
            if !(done || max_res <= STAGNATION_RESIDUAL_CAP) {
                return Err(Error::ConvergenceFailure { iterations: it, residual: max_res, tolerance: req.tol });
            }
            last = Some(TargetResult {
                vecs,
                theta,
                residuals: res,
                diag: TargetDiagnostics { target: sigma, iterations: it, max_residual: max_res, stagnated: !done },
            });
            break;
        }
        x = &z * &uo;
    }
    last.ok_or(Error::ConvergenceFailure { iterations: req.max_iter, residual: f64::NAN, tolerance: req.tol })
}

fn region_fraction(spec: &GridSpec, v: &[Complex64], inside: impl Fn(f64, f64) -> bool) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in 0..spec.len() {
        let p = v[2 * s].norm_sqr() + v[2 * s + 1].norm_sqr();
        let (x, y) = spec.point(s);
        den += p;
        if inside(x, y) {
            num += p;
        }
    }
    num / den
}

/// Rotate each group of near-degenerate columns (first `k` only) so that the
/// region projector is diagonal inside the group, most localized first.
fn rotate_clusters(
    op: &DiracOperator,
    tr: &TargetResult,
    k: usize,
    tol: f64,
    region: Region,
) -> (Vec<Vec<Complex64>>, Vec<f64>, Vec<f64>) {
    let spec = op.spec;
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| tr.theta[a].total_cmp(&tr.theta[b]));
    let mask: Vec<f64> = (0..spec.len())
        .map(|s| {
            let (x, y) = spec.point(s);
            if region.contains(&spec, x, y) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut out_v = Vec::with_capacity(k);
    let mut out_e = Vec::with_capacity(k);
    let mut out_r = Vec::with_capacity(k);
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && tr.theta[idx[end]] - tr.theta[idx[end - 1]] <= tol {
            end += 1;
        }
        let group = &idx[start..end];
        let g = group.len();
        let cols: Vec<Vec<Complex64>> =
            group.iter().map(|&c| (0..tr.vecs.nrows()).map(|r| tr.vecs[(r, c)]).collect()).collect();
        if g == 1 {
            out_v.push(cols[0].clone());
            out_e.push(tr.theta[group[0]]);
            out_r.push(tr.residuals[group[0]]);
        } else {
            let pm = Mat::<Complex64>::from_fn(g, g, |a, b| {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..spec.len() {
                    if mask[s] != 0.0 {
                        acc += cols[a][2 * s].conj() * cols[b][2 * s] + cols[a][2 * s + 1].conj() * cols[b][2 * s + 1];
                    }
                }
                acc
            });
            let eig = pm.self_adjoint_eigen(Side::Lower).expect("small Hermitian eigenproblem");
            let u = eig.U();
            let worst = group.iter().map(|&c| tr.residuals[c]).fold(0.0, f64::max);
            for c in (0..g).rev() {
                let dim = cols[0].len();
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                for (a, col) in cols.iter().enumerate() {
                    let w = u[(a, c)];
                    for r in 0..dim {
                        v[r] += col[r] * w;
                    }
                }
                let mut hv = vec![Complex64::new(0.0, 0.0); dim];
                op.apply_h(&v, &mut hv);
                let num: Complex64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
                let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                out_e.push(num.re / den);
                out_r.push(worst);
                out_v.push(v);
            }
        }
        start = end;
    }
    (out_v, out_e, out_r)
}

/// Eigenpairs of `matrix` (assembled from `op`) nearest each target.
pub fn spectrum(op: &DiracOperator, matrix: &CsrMatrix, req: &SpectrumRequest) -> Result<SpectrumReport> {
    if req.k == 0 || req.k > MAX_EIG_COUNT {
        return Err(Error::InvalidRequest(format!("k must be in 1..={MAX_EIG_COUNT}, got {}", req.k)));
    }
    if req.targets.is_empty() {
        return Err(Error::InvalidRequest("no target energies".into()));
    }
    if matrix.dim != op.dim() {
        return Err(Error::GridMismatch(format!("matrix dimension {} vs operator {}", matrix.dim, op.dim())));
    }
    if req.k > matrix.dim {
        return Err(Error::InvalidRequest(format!("k = {} exceeds the dimension {}", req.k, matrix.dim)));
    }
    let spec = op.spec;
    let prev_par = faer::get_global_parallelism();
    faer::set_global_parallelism(Par::Seq);
    let h = matrix.to_faer_shifted(0.0);
    let result = h.and_then(|h| {
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let mut accepted: Vec<(Vec<Complex64>, Eigenpair)> = Vec::new();
        let mut diagnostics = Vec::with_capacity(req.targets.len());
        for &sigma in &req.targets {
            let tr = solve_target(matrix, &h, sigma, req, &mut rng)?;
            diagnostics.push(tr.diag.clone());
            let (vs, es, rs) = rotate_clusters(op, &tr, req.k, req.cluster_tol, req.region);
            for ((v, e), r) in vs.into_iter().zip(es).zip(rs) {
                if is_duplicate(&accepted, &v, e, req.cluster_tol) {
                    continue;
                }
                let localization = region_fraction(&spec, &v, |x, y| req.region.contains(&spec, x, y));
                let outer_leak = region_fraction(&spec, &v, |x, y| in_outer_third(&spec, x, y));
                let high_momentum = op.high_momentum_weight(&v);
                let doubler = high_momentum > req.doubler_threshold;
                let retained = outer_leak <= req.leak_threshold && !doubler;
                accepted.push((
                    v,
                    Eigenpair {
                        energy: e,
                        residual: r,
                        target: sigma,
                        localization,
                        outer_leak,
                        high_momentum,
                        doubler,
                        retained,
                    },
                ));
            }
        }
        let max_imag = accepted
            .iter()
            .map(|(v, _)| {
                let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
                matrix.matvec(v, &mut hv);
                let num: Complex64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
                let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                (num.im / den).abs()
            })
            .fold(0.0, f64::max);
        let mut pairs: Vec<Eigenpair> = accepted.into_iter().map(|(_, p)| p).collect();
        pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let clusters = form_clusters(&pairs, req.cluster_tol);
        Ok(SpectrumReport {
            eigenvalues: pairs.iter().map(|p| p.energy).collect(),
            doubler_warning: pairs.iter().any(|p| p.doubler),
            pairs,
            clusters,
            diagnostics,
            max_imag,
            params: SpectrumParams {
                half_width: spec.half_width,
                n: spec.n,
                wilson: op.wilson,
                k: req.k,
                targets: req.targets.clone(),
                seed: req.seed,
                cluster_tol: req.cluster_tol,
                region: req.region,
                leak_threshold: req.leak_threshold,
            },
        })
    });
    faer::set_global_parallelism(prev_par);
    result
}

/// A vector is a duplicate when it lies (mostly) in the span of accepted
/// vectors of similar energy.
fn is_duplicate(accepted: &[(Vec<Complex64>, Eigenpair)], v: &[Complex64], e: f64, tol: f64) -> bool {
    let near: Vec<&Vec<Complex64>> =
        accepted.iter().filter(|(_, p)| (p.energy - e).abs() <= tol).map(|(w, _)| w).collect();
    if near.is_empty() {
        return false;
    }
    // Orthonormalize the nearby vectors, then measure what is left of v.
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(near.len());
    for w in near {
        let mut u = w.clone();
        for b in &basis {
            let c: Complex64 = b.iter().zip(&u).map(|(p, q)| p.conj() * q).sum();
            for (x, y) in u.iter_mut().zip(b) {
                *x -= y * c;
            }
        }
        let n: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            u.iter_mut().for_each(|z| *z /= n);
            basis.push(u);
        }
    }
    let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let proj2: f64 =
        basis.iter().map(|b| b.iter().zip(v).map(|(p, q)| p.conj() * q).sum::<Complex64>().norm_sqr()).sum();
    proj2 / vn2 > 0.5
}

fn form_clusters(pairs: &[Eigenpair], tol: f64) -> Vec<Cluster> {
    let kept: Vec<&Eigenpair> = pairs.iter().filter(|p| p.retained).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < kept.len() {
        let mut end = start + 1;
        while end < kept.len() && kept[end].energy - kept[end - 1].energy <= tol {
            end += 1;
        }
        let g = &kept[start..end];
        let count = g.len();
        out.push(Cluster {
            center: g.iter().map(|p| p.energy).sum::<f64>() / count as f64,
            count,
            localization: g.iter().map(|p| p.localization).sum::<f64>() / count as f64,
            min: g[0].energy,
            max: g[count - 1].energy,
        });
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlab::sparse::{assemble, DEFAULT_SITE_CAP};

    #[test]
    fn free_box_has_a_gap() {
        let g = GridSpec::new(3.0, 48).unwrap();
        let op = DiracOperator::free(g, 0.5).unwrap();
        let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
        let req = SpectrumRequest::new(6, vec![0.0], 1.0, Region::InnerBox);
        let r = spectrum(&op, &m, &req).unwrap();
        let lowest = r.pairs.iter().filter(|p| p.retained).map(|p| p.energy.abs()).fold(f64::INFINITY, f64::min);
        assert!(lowest > std::f64::consts::PI / (2.0 * g.half_width), "lowest {lowest}");
        assert!(r.clusters.iter().all(|c| c.center.abs() > std::f64::consts::PI / (2.0 * g.half_width)));
        assert!(r.max_imag < 1e-10);
    }

    #[test]
    fn chiral_pairs_in_free_box() {
        let g = GridSpec::new(3.0, 40).unwrap();
        let op = DiracOperator::free(g, 0.0).unwrap();
        let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
        let mut req = SpectrumRequest::new(8, vec![0.05], 1.0, Region::InnerBox);
        req.doubler_threshold = 2.0;
        let r = spectrum(&op, &m, &req).unwrap();
        for e in &r.eigenvalues {
            let partner = r.eigenvalues.iter().map(|f| (f + e).abs()).fold(f64::INFINITY, f64::min);
            assert!(partner < 1e-6 || e.abs() > 0.9 * r.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let g = GridSpec::new(1.0, 8).unwrap();
        let op = DiracOperator::free(g, 0.5).unwrap();
        let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
        let req = SpectrumRequest::new(201, vec![0.0], 1.0, Region::InnerBox);
        assert!(matches!(spectrum(&op, &m, &req), Err(Error::InvalidRequest(_))));
        let req = SpectrumRequest::new(2, vec![], 1.0, Region::InnerBox);
        assert!(matches!(spectrum(&op, &m, &req), Err(Error::InvalidRequest(_))));
    }
}
