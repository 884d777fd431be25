//! Run configuration read from a single TOML file.

use std::path::{Path, PathBuf};

use fluxdirac::grid::Encoding;
use fluxdirac::potential::{LambdaMethod, DEFAULT_R0};
use fluxdirac::{FieldKind, FieldProfile, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const ENV_OUTPUT_DIR: &str = "FLUXDIRAC_OUTPUT_DIR";
pub const ENV_THREADS: &str = "FLUXDIRAC_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    UniformDisk,
    Gaussian,
    UniformEverywhere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    #[serde(rename = "B0", alias = "b0")]
    pub b0: f64,
    #[serde(default, alias = "R")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Flags {
    pub r0: f64,
    pub wilson_w: f64,
    /// Defaults to 0.05·√(2|B0|).
    pub cluster_tol: Option<f64>,
    pub seed: u64,
    pub m_max: u32,
    pub j_max: u32,
    pub eig_count: usize,
    pub targets: Vec<f64>,
    pub lambda_method: LambdaMethod,
    pub encoding: Encoding,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            r0: DEFAULT_R0,
            wilson_w: 0.5,
            cluster_tol: None,
            seed: 7,
            m_max: 3,
            j_max: 8,
            eig_count: 8,
            targets: vec![0.0],
            lambda_method: LambdaMethod::FastPoisson,
            encoding: Encoding::Text,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSection,
    pub grid: GridSection,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, applies environment overrides, validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)?;
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(ENV_OUTPUT_DIR) {
            if !dir.is_empty() {
                self.output.dir = PathBuf::from(dir);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field_profile()?;
        self.grid_spec()?;
        let f = &self.flags;
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(f.r0 > 0.0 && f.r0.is_finite()) {
            return bad(format!("flags.r0 must be positive, got {}", f.r0));
        }
        if !(f.wilson_w >= 0.0 && f.wilson_w.is_finite()) {
            return bad(format!("flags.wilson_w must be non-negative, got {}", f.wilson_w));
        }
        if let Some(t) = f.cluster_tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("flags.cluster_tol must be positive, got {t}"));
            }
        }
        if f.eig_count == 0 || f.eig_count > fluxdirac::numlab::eigen::MAX_EIG_COUNT {
            return bad(format!(
                "flags.eig_count must lie in 1..={}, got {}",
                fluxdirac::numlab::eigen::MAX_EIG_COUNT,
                f.eig_count
            ));
        }
        if f.targets.is_empty() || f.targets.iter().any(|t| !t.is_finite()) {
            return bad("flags.targets must be a non-empty list of finite energies".into());
        }
        if f.m_max > 20 {
            return bad(format!("flags.m_max must be at most 20, got {}", f.m_max));
        }
        if f.j_max > 64 {
            return bad(format!("flags.j_max must be at most 64, got {}", f.j_max));
        }
        if self.output.dir.as_os_str().is_empty() {
            return bad("output.dir must not be empty".into());
        }
        Ok(())
    }

    pub fn field_profile(&self) -> Result<FieldProfile> {
        let p = &self.profile;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Config(format!("profile.{name} is required for kind {:?}", p.kind)))
        };
        let forbid = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(CliError::Config(format!("profile.{name} does not apply to kind {:?}", p.kind))),
            None => Ok(()),
        };
        let kind = match p.kind {
            ProfileKind::UniformDisk => {
                forbid(p.sigma, "sigma")?;
                FieldKind::UniformDisk { b0: p.b0, radius: need(p.radius, "radius")? }
            }
            ProfileKind::Gaussian => {
                forbid(p.radius, "radius")?;
                FieldKind::Gaussian { b0: p.b0, sigma: need(p.sigma, "sigma")? }
            }
            ProfileKind::UniformEverywhere => {
                forbid(p.radius, "radius")?;
                forbid(p.sigma, "sigma")?;
                FieldKind::UniformEverywhere { b0: p.b0 }
            }
        };
        Ok(FieldProfile::with_center(kind, p.center)?)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid.half_width, self.grid.n)?)
    }

    pub fn cluster_tol(&self) -> f64 {
        self.flags.cluster_tol.unwrap_or_else(|| fluxdirac::numlab::eigen::default_cluster_tol(self.profile.b0.abs()))
    }
}

/// Thread count from the environment, if set.
pub fn env_threads() -> Result<Option<usize>> {
    match std::env::var(ENV_THREADS) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{ENV_THREADS} must be a positive integer, got {v:?}"))),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"
[profile]
kind = "uniform_disk"
B0 = 1.0
radius = 2.0

[grid]
L = 8.0
n = 128
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(DISK).unwrap();
        assert_eq!(c.flags, Flags::default());
        assert_eq!(c.output.dir, PathBuf::from("out"));
        assert_eq!(c.field_profile().unwrap().kind, FieldKind::UniformDisk { b0: 1.0, radius: 2.0 });
        assert!((c.cluster_tol() - 0.05 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_and_inconsistent_keys() {
        assert!(RunConfig::from_toml(&format!("{DISK}\n[extra]\nx = 1\n")).is_err());
        assert!(RunConfig::from_toml(&DISK.replace("n = 128", "n = 128\nm = 3")).is_err());
        assert!(RunConfig::from_toml(&DISK.replace("radius = 2.0", "sigma = 2.0")).is_err());
        assert!(RunConfig::from_toml(&DISK.replace("radius = 2.0", "radius = -2.0")).is_err());
        assert!(RunConfig::from_toml(&DISK.replace("n = 128", "n = 2")).is_err());
        assert!(RunConfig::from_toml(&format!("{DISK}\n[flags]\neig_count = 0\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{DISK}\n[flags]\nwilson = 0.5\n")).is_err());
    }

    #[test]
    fn flags_section_overrides() {
        let c = RunConfig::from_toml(&format!(
            "{DISK}\n[flags]\nwilson_w = 0.0\nseed = 3\ntargets = [0.0, 1.5]\nlambda_method = \"green_quadrature\"\nencoding = \"binary\"\n"
        ))
        .unwrap();
        assert_eq!(c.flags.wilson_w, 0.0);
        assert_eq!(c.flags.seed, 3);
        assert_eq!(c.flags.targets, vec![0.0, 1.5]);
        assert_eq!(c.flags.lambda_method, LambdaMethod::GreenQuadrature);
        assert_eq!(c.flags.encoding, Encoding::Binary);
    }
}
