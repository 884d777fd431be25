//! One function per subcommand. Each writes its files into the output
//! directory and returns the text printed on stdout.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fluxdirac::field::total_flux;
use fluxdirac::numlab::{
    assemble, geometric_radii, spectrum, truncated_norms, DiracOperator, NormOptions, NormSeries, Region,
    SpectrumRequest, DEFAULT_SITE_CAP,
};
use fluxdirac::potential::{fit_asymptote, gauge_from_lambda, laplacian_residual, solve_lambda_with, verify_curl};
use fluxdirac::symcalc::{
    build_level, degeneracy_table, evaluate_expr, normalizability, tail_exponent, zero_mode, EvalMode, FluxBranch,
    Regime,
};
use fluxdirac::{FieldProfile, FluxInfo};
use serde::Serialize;
use serde_json::json;

use crate::checks;
use crate::config::RunConfig;
use crate::error::Result;

pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    /// Process exit code.
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String, files: Vec<PathBuf>) -> Self {
        Self { stdout, files, code: 0 }
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn bounded_flux(profile: &FieldProfile) -> Result<FluxInfo> {
    Ok(total_flux(profile)?)
}

fn branch_of(flux: &FluxInfo) -> Result<FluxBranch> {
    Ok(FluxBranch::of(flux)?)
}

pub fn flux(cfg: &RunConfig) -> Result<Outcome> {
    let profile = cfg.field_profile()?;
    let f = bounded_flux(&profile)?;
    let branch = FluxBranch::of(&f).ok();
    let mut text = format!(
        "phi = {:.6}\nphi/2pi = {:.6}\nN = {}\nmarginal = {}\n",
        f.phi,
        f.phi_over_2pi(),
        f.n_integer,
        f.marginal
    );
    match branch {
        Some(b) => writeln!(text, "branch = {}", b.symbol()).unwrap(),
        None => writeln!(text, "zero flux: no zero-mode branch").unwrap(),
    }
    let path = out_path(cfg, "flux.json")?;
    write_json(
        &path,
        &json!({
            "command": "flux",
            "profile": profile,
            "phi": f.phi,
            "phi_over_2pi": f.phi_over_2pi(),
            "n_integer": f.n_integer,
            "sign": f.sign,
            "marginal": f.marginal,
            "zero_flux": branch.is_none(),
            "branch": branch.map(|b| b.symbol()),
        }),
    )?;
    Ok(Outcome::ok(text, vec![path]))
}

pub fn lambda(cfg: &RunConfig) -> Result<Outcome> {
    let profile = cfg.field_profile()?;
    let aux = solve_lambda_with(&profile, cfg.grid_spec()?, cfg.flags.lambda_method, cfg.flags.r0)?;
    let gauge = gauge_from_lambda(&aux);
    let curl = verify_curl(&gauge, &profile)?;
    let fit = if aux.asymptotic_coeff.is_some() { Some(fit_asymptote(&aux)?) } else { None };
    let enc = cfg.flags.encoding;
    let lambda_path = out_path(cfg, "lambda.grid")?;
    let mut w = BufWriter::new(File::create(&lambda_path)?);
    aux.write_to(&mut w, enc)?;
    w.flush()?;
    let gauge_path = out_path(cfg, "gauge.grid")?;
    let phi = aux.asymptotic_coeff.map(|a| std::f64::consts::TAU * a);
    let mut w = BufWriter::new(File::create(&gauge_path)?);
    gauge.write_to(&mut w, phi, aux.r0, enc)?;
    w.flush()?;
    let report_path = out_path(cfg, "lambda.json")?;
    write_json(
        &report_path,
        &json!({
            "command": "lambda",
            "L": cfg.grid.half_width,
            "n": cfg.grid.n,
            "method": cfg.flags.lambda_method,
            "r0": aux.r0,
            "curl_err": curl.max_error,
            "curl_at": curl.at,
            "nodes_checked": curl.nodes_checked,
            "nodes_excluded": curl.nodes_excluded,
            "slope": fit.map(|f| f.slope),
            "slope_expected": aux.asymptotic_coeff,
            "intercept": fit.map(|f| f.intercept),
            "r0_fit": fit.and_then(|f| f.r0),
            "laplacian_residual": laplacian_residual(&aux),
            "divergence_max": gauge.divergence_max(),
            "files": ["lambda.grid", "gauge.grid"],
        }),
    )?;
    let mut text = format!("curl_err = {:.3e}\n", curl.max_error);
    if let (Some(f), Some(a)) = (fit, aux.asymptotic_coeff) {
        writeln!(text, "slope = {:.6} (expected {a:.6})", f.slope).unwrap();
    }
    Ok(Outcome::ok(text, vec![lambda_path, gauge_path, report_path]))
}

/// Regime for symbolic commands: uniform field for a field filling the plane,
/// far-field otherwise.
fn symbolic_setup(cfg: &RunConfig) -> Result<(FluxInfo, Regime, f64)> {
    let profile = cfg.field_profile()?;
    let b = profile.b0();
    if profile.unbounded_flux() {
        let flux = FluxInfo::from_phi(if b == 0.0 { 0.0 } else { b.signum() })?;
        Ok((flux, Regime::UniformField { b }, b))
    } else {
        let flux = bounded_flux(&profile)?;
        Ok((flux, Regime::Asymptotic { phi_over_2pi: flux.phi_over_2pi() }, b))
    }
}

pub fn zero_modes(cfg: &RunConfig) -> Result<Outcome> {
    let flux = bounded_flux(&cfg.field_profile()?)?;
    let branch = branch_of(&flux)?;
    let a = flux.phi_over_2pi();
    let mut states = Vec::new();
    let mut count = 0;
    for j in 0..=cfg.flags.j_max {
        let exact = zero_mode(j, &flux)?;
        let folded = exact.fold_asymptotic(a);
        let tail = normalizability(folded.active(), &flux, j, 0)?;
        count += tail.integrable as u32;
        states.push(json!({
            "j": j,
            "spinor": exact.spinor,
            "asymptotic": folded.spinor,
            "rho": tail.rho_max,
            "integrable": tail.integrable,
            "marginal": tail.marginal,
        }));
    }
    let path = out_path(cfg, "zero_modes.json")?;
    write_json(
        &path,
        &json!({
            "command": "zero-modes",
            "phi": flux.phi,
            "phi_over_2pi": a,
            "n_integer": flux.n_integer,
            "branch": branch.symbol(),
            "integrable_count": count,
            "states": states,
        }),
    )?;
    Ok(Outcome::ok(format!("branch = {}\nintegrable zero modes = {count}\n", branch.symbol()), vec![path]))
}

pub fn ladder(cfg: &RunConfig) -> Result<Outcome> {
    let (flux, regime, b) = symbolic_setup(cfg)?;
    let branch = branch_of(&flux)?;
    let mut levels = Vec::new();
    let mut csv = String::from("m,j,E_m,E_squared,terms_upper,terms_lower\n");
    for m in 0..=cfg.flags.m_max {
        let mut states = Vec::new();
        for j in 0..=cfg.flags.j_max {
            let s = build_level(j, &flux, b, m, &regime)?;
            writeln!(
                csv,
                "{m},{j},{:.15},{:.15},{},{}",
                s.energy_value(),
                s.energy.squared(),
                s.spinor.upper.len(),
                s.spinor.lower.len()
            )
            .unwrap();
            states.push(json!({ "j": j, "spinor": s.spinor }));
        }
        let e = fluxdirac::symcalc::LevelEnergy { level: m, field_abs: b.abs(), sign: 1 };
        levels.push(json!({ "m": m, "E_m": e.value(), "E_squared": e.squared(), "states": states }));
    }
    let json_path = out_path(cfg, "ladder.json")?;
    write_json(
        &json_path,
        &json!({ "command": "ladder", "b": b, "branch": branch.symbol(), "regime": regime, "levels": levels }),
    )?;
    let csv_path = out_path(cfg, "ladder.csv")?;
    fs::write(&csv_path, csv)?;
    let mut text = String::new();
    for m in 0..=cfg.flags.m_max {
        let e = fluxdirac::symcalc::LevelEnergy { level: m, field_abs: b.abs(), sign: 1 };
        writeln!(text, "E_{m} = {:.6}", e.value()).unwrap();
    }
    Ok(Outcome::ok(text, vec![json_path, csv_path]))
}

/// Radii for truncated norms.
pub const TAIL_RADII: (f64, f64, usize) = (4.0, 4000.0, 16);

pub fn tail_report(cfg: &RunConfig) -> Result<Outcome> {
    let flux = bounded_flux(&cfg.field_profile()?)?;
    let branch = branch_of(&flux)?;
    let b = cfg.profile.b0;
    let a = flux.phi_over_2pi();
    let regime = Regime::Asymptotic { phi_over_2pi: a };
    let mode = EvalMode::Asymptotic { phi_over_2pi: a };
    let radii = geometric_radii(TAIL_RADII.0, TAIL_RADII.1, TAIL_RADII.2);
    let opts = NormOptions::default();
    let mut rows = Vec::new();
    let mut csv = String::from("m,j,component,radius,norm\n");
    for m in 0..=cfg.flags.m_max {
        for j in 0..=cfg.flags.j_max {
            let s = build_level(j, &flux, b, m, &regime)?;
            for (c, comp) in s.spinor.components().into_iter().enumerate() {
                if comp.is_zero() {
                    continue;
                }
                let tail = normalizability(comp, &flux, j, m)?;
                let rho = tail_exponent(comp)?;
                let series: NormSeries = truncated_norms(
                    |x, y| evaluate_expr(comp, x, y, mode).map_or(f64::NAN, |v| v.norm_sqr()),
                    &radii,
                    &opts,
                )?;
                for (r, n) in series.radii.iter().zip(&series.norms) {
                    writeln!(csv, "{m},{j},{c},{r:.12e},{n:.12e}").unwrap();
                }
                rows.push(json!({
                    "m": m,
                    "j": j,
                    "component": c,
                    "rho": rho,
                    "integrable": tail.integrable,
                    "marginal": tail.marginal,
                    "j_max_tool": tail.j_max_tool,
                    "j_max_paper": tail.j_max_paper,
                    "increment_slope": series.slope,
                    "growth": series.growth,
                    "predicted": fluxdirac::numlab::Growth::predicted(rho),
                }));
            }
        }
    }
    let json_path = out_path(cfg, "tail_report.json")?;
    write_json(
        &json_path,
        &json!({
            "command": "tail-report",
            "phi_over_2pi": a,
            "n_integer": flux.n_integer,
            "branch": branch.symbol(),
            "radii": radii,
            "components": rows,
        }),
    )?;
    let csv_path = out_path(cfg, "tail_norms.csv")?;
    fs::write(&csv_path, csv)?;
    Ok(Outcome::ok(format!("components analysed = {}\n", rows.len()), vec![json_path, csv_path]))
}

pub fn degeneracy(cfg: &RunConfig) -> Result<Outcome> {
    let flux = bounded_flux(&cfg.field_profile()?)?;
    let report = degeneracy_table(&flux, cfg.profile.b0, cfg.flags.m_max, cfg.flags.j_max)?;
    let mut csv = String::from(
        "m,E_m,paper_count,tool_count,marginal,j_max_tool,j_max_paper,discrepancy,inclusive_count,decay_count\n",
    );
    let mut text = format!("branch = {}\n m  E_m       paper  tool\n", report.branch.symbol());
    for r in &report.rows {
        let jt = r.j_max_tool.map_or(String::new(), |j| j.to_string());
        writeln!(
            csv,
            "{},{:.15},{},{},{},{jt},{},{},{},{}",
            r.m,
            r.e_m,
            r.paper_count,
            r.tool_count,
            r.marginal,
            r.j_max_paper,
            r.discrepancy,
            r.inclusive_count,
            r.decay_count
        )
        .unwrap();
        writeln!(text, "{:>2}  {:<8.6}  {:>5}  {:>4}", r.m, r.e_m, r.paper_count, r.tool_count).unwrap();
    }
    let csv_path = out_path(cfg, "degeneracy.csv")?;
    fs::write(&csv_path, csv)?;
    let json_path = out_path(cfg, "degeneracy.json")?;
    let mut value = serde_json::to_value(&report)?;
    value["command"] = json!("degeneracy");
    write_json(&json_path, &value)?;
    Ok(Outcome::ok(text, vec![csv_path, json_path]))
}

/// Localization region for the configured profile.
pub fn default_region(profile: &FieldProfile) -> Region {
    if profile.unbounded_flux() {
        Region::InnerBox
    } else {
        Region::Disk { center: profile.center, radius: 1.5 * profile.support_radius() }
    }
}

pub fn oracle_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let profile = cfg.field_profile()?;
    let op = DiracOperator::from_profile(&profile, cfg.grid_spec()?, cfg.flags.wilson_w)?;
    let m = assemble(&op, DEFAULT_SITE_CAP)?;
    let mut req = SpectrumRequest::new(
        cfg.flags.eig_count,
        cfg.flags.targets.clone(),
        profile.b0().abs(),
        default_region(&profile),
    );
    req.seed = cfg.flags.seed;
    req.cluster_tol = cfg.cluster_tol();
    let report = spectrum(&op, &m, &req)?;
    let field_abs = profile.b0().abs();
    let e_max = checks::ZERO_ENERGY_FRACTION * (2.0 * field_abs).sqrt();
    let localized_zero = report.count_localized(e_max, checks::LOCALIZATION_MIN);
    let analyzer = if profile.unbounded_flux() {
        None
    } else {
        let flux = bounded_flux(&profile)?;
        match degeneracy_table(&flux, profile.b0(), 0, cfg.flags.j_max) {
            Ok(t) => Some(t.rows[0].tool_count),
            Err(fluxdirac::Error::ZeroFlux) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let csv_path = out_path(cfg, "spectrum.csv")?;
    let mut w = BufWriter::new(File::create(&csv_path)?);
    report.write_csv(&mut w)?;
    w.flush()?;
    let json_path = out_path(cfg, "spectrum.json")?;
    let mut value = serde_json::to_value(&report)?;
    value["command"] = json!("oracle-spectrum");
    value["localized_zero_modes"] = json!(localized_zero);
    value["analyzer_zero_modes"] = json!(analyzer);
    write_json(&json_path, &value)?;
    let mut text = String::new();
    for c in &report.clusters {
        writeln!(text, "cluster E = {:+.6}  count = {}  localization = {:.3}", c.center, c.count, c.localization)
            .unwrap();
    }
    writeln!(text, "localized zero modes = {localized_zero}").unwrap();
    if report.doubler_warning {
        writeln!(text, "warning: doubler states present (wilson_w = {})", cfg.flags.wilson_w).unwrap();
    }
    Ok(Outcome::ok(text, vec![csv_path, json_path]))
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    verify_observed(cfg, &mut |_, _| {})
}

/// `verify`, reporting each check and its wall time to `observe` as it finishes.
pub fn verify_observed(
    cfg: &RunConfig,
    observe: &mut dyn FnMut(&checks::CheckResult, std::time::Duration),
) -> Result<Outcome> {
    let report = checks::run_all_observed(cfg, observe);
    let path = out_path(cfg, "verify.json")?;
    write_json(&path, &report)?;
    let mut text = String::new();
    for c in &report.checks {
        writeln!(text, "{}", c.line()).unwrap();
    }
    for w in &report.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    for c in report.checks.iter().filter(|c| c.criterion.is_some() && c.status == checks::Status::Fail) {
        if let Some(m) = c.measures.iter().find(|m| !m.passed) {
            let v = m.value.map_or("n/a".into(), |v| format!("{v:e}"));
            writeln!(
                text,
                "failed: {} {} measured {v}, threshold {} {:e}",
                c.id,
                m.quantity,
                m.comparator.symbol(),
                m.threshold
            )
            .unwrap();
        }
    }
    let code = if report.primary_passed { 0 } else { 1 };
    Ok(Outcome { stdout: text, files: vec![path], code })
}
