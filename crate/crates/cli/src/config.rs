//! Run configuration read from a TOML file and overridden by flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fdlbm::experiments::FitWindow;
use fdlbm::schemes::{ThetaGradient, ThetaXySign};
use fdlbm::{
    PoiseuilleSpec, SchemeConfig, SchemeKind, ShearWaveSpec, StencilKind, StokesDiskSpec, StokesMode, Target,
    WallRule,
};
use serde::{Deserialize, Serialize};

/// Invalid configuration: unreadable file, unknown key or bad value.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output: OutputSection,
    pub scheme: SchemeSection,
    pub analyze: AnalyzeSection,
    pub shear_wave: ShearWaveSection,
    pub stokes_disk: StokesSection,
    pub poiseuille: PoiseuilleSection,
    pub tables: TablesSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    pub nu: f64,
    /// Finite-difference stencil; ignored by the other schemes.
    pub stencil: StencilKind,
    /// Energy-flux rate of MRT; the quartic value when absent.
    pub s_q: Option<f64>,
    pub theta_xy_sign: ThetaXySign,
    pub theta_gradient: ThetaGradient,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            kind: SchemeKind::FdLbm,
            nu: 0.05,
            stencil: StencilKind::FivePoint,
            s_q: None,
            theta_xy_sign: ThetaXySign::Symmetric,
            theta_gradient: ThetaGradient::Momentum,
        }
    }
}

impl SchemeSection {
    pub fn build(&self) -> fdlbm::Result<SchemeConfig> {
        if self.s_q.is_some() && self.kind != SchemeKind::Mrt {
            return Err(fdlbm::Error::InvalidParameter("s_q applies only to the mrt scheme".into()));
        }
        let cfg = match self.kind {
            SchemeKind::Mrt => SchemeConfig::mrt_for_viscosity(self.nu, self.s_q)?,
            SchemeKind::Bgk => SchemeConfig::bgk(self.nu)?,
            SchemeKind::Acm => SchemeConfig::acm(self.nu)?,
            SchemeKind::FdLbm => SchemeConfig::fdlbm(self.nu, self.stencil)?,
        };
        Ok(cfg.with_theta_xy_sign(self.theta_xy_sign).with_theta_gradient(self.theta_gradient))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    /// Direction of the wave vector in degrees.
    pub phi_deg: f64,
    /// Mean flow speed along the wave vector.
    pub speed: f64,
    /// Single wave number for an eigenvalue report; curves when absent.
    pub k: Option<f64>,
    pub k_max: f64,
    pub samples: usize,
    pub fit_k_max: f64,
    pub fit_samples: usize,
    /// Amplitude of the linearisation of the eigenvalue report.
    pub delta: f64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self { phi_deg: 0.0, speed: 0.0, k: None, k_max: PI, samples: 64, fit_k_max: 0.5, fit_samples: 24, delta: 1e-4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShearWaveSection {
    pub n: Option<usize>,
    pub wave: Option<[i64; 2]>,
    pub amplitude: Option<f64>,
    pub speed: Option<f64>,
    pub steps: Option<usize>,
    pub fit_skip: Option<usize>,
    pub fit_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StokesSection {
    /// `singlet-<l>` or `doublet-<m>`.
    pub mode: Option<String>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub wall_rule: Option<WallRule>,
    pub amplitude: Option<f64>,
    pub steps: Option<usize>,
    pub fit_skip: Option<usize>,
    pub fit_floor: Option<f64>,
    pub contamination_limit: Option<f64>,
    pub purity_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoiseuilleSection {
    pub width: Option<usize>,
    pub xi: Option<f64>,
    pub force: Option<f64>,
    pub wall_rule: Option<WallRule>,
    pub tolerance: Option<f64>,
    pub check_every: Option<usize>,
    pub max_steps: Option<usize>,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TablesSection {
    pub which: Vec<Target>,
    pub shear_steps: usize,
    pub stokes_steps: usize,
    pub curve_simulation: bool,
}

impl Default for TablesSection {
    fn default() -> Self {
        Self { which: vec![Target::Table1], shear_steps: 3000, stokes_steps: 3000, curve_simulation: true }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))
    }

    pub fn shear_wave_spec(&self) -> fdlbm::Result<ShearWaveSpec> {
        let s = &self.shear_wave;
        let mut spec = ShearWaveSpec::new(self.scheme.build()?);
        set(&mut spec.n, s.n);
        set(&mut spec.wave, s.wave);
        set(&mut spec.amplitude, s.amplitude);
        set(&mut spec.speed, s.speed);
        set(&mut spec.steps, s.steps);
        set_fit(&mut spec.fit, s.fit_skip, s.fit_floor);
        Ok(spec)
    }

    pub fn stokes_spec(&self) -> fdlbm::Result<StokesDiskSpec> {
        let s = &self.stokes_disk;
        let mode = parse_mode(s.mode.as_deref().unwrap_or("singlet-1"))?;
        let mut spec = StokesDiskSpec::new(mode, self.scheme.build()?);
        set(&mut spec.nx, s.nx);
        set(&mut spec.ny, s.ny);
        set(&mut spec.center, s.center);
        set(&mut spec.radius, s.radius);
        set(&mut spec.wall_rule, s.wall_rule);
        set(&mut spec.amplitude, s.amplitude);
        set(&mut spec.steps, s.steps);
        set_fit(&mut spec.fit, s.fit_skip, s.fit_floor);
        set(&mut spec.contamination_limit, s.contamination_limit);
        set(&mut spec.purity_steps, s.purity_steps);
        Ok(spec)
    }

    pub fn poiseuille_spec(&self) -> fdlbm::Result<PoiseuilleSpec> {
        let s = &self.poiseuille;
        let mut spec = PoiseuilleSpec::new(s.xi.unwrap_or(0.5), self.scheme.build()?, WallRule::BounceBack);
        set(&mut spec.width, s.width);
        set(&mut spec.force, s.force);
        set(&mut spec.wall_rule, s.wall_rule);
        set(&mut spec.tolerance, s.tolerance);
        set(&mut spec.check_every, s.check_every);
        set(&mut spec.max_steps, s.max_steps);
        set(&mut spec.max_residual, s.max_residual);
        Ok(spec)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_fit(fit: &mut FitWindow, skip: Option<usize>, floor: Option<f64>) {
    set(&mut fit.skip, skip);
    set(&mut fit.floor, floor);
}

pub fn parse_mode(s: &str) -> fdlbm::Result<StokesMode> {
    let bad = || fdlbm::Error::InvalidParameter(format!("mode {s:?} is not singlet-<l> or doublet-<m>"));
    let (family, index) = s.split_once('-').ok_or_else(bad)?;
    let index: u32 = index.parse().map_err(|_| bad())?;
    match family {
        "singlet" => Ok(StokesMode::Singlet { l: index }),
        "doublet" => Ok(StokesMode::Doublet { m: index }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_spec_defaults() {
        let cfg = RunConfig::parse(
            r#"
            [scheme]
            kind = "mrt"
            nu = 0.02
            s_q = 1.3

            [shear_wave]
            n = 64
            speed = 0.1

            [stokes_disk]
            mode = "doublet-2"
            wall_rule = "bounce-back"
            "#,
        )
        .unwrap();
        let sw = cfg.shear_wave_spec().unwrap();
        assert_eq!((sw.n, sw.speed, sw.steps), (64, 0.1, 3000));
        assert_eq!(sw.scheme.rates.s_q, 1.3);
        let st = cfg.stokes_spec().unwrap();
        assert_eq!(st.mode, StokesMode::Doublet { m: 2 });
        assert_eq!(st.wall_rule, WallRule::BounceBack);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[scheme]\nviscosity = 0.1\n").is_err());
        assert!(RunConfig::parse("[shearwave]\nn = 3\n").is_err());
        assert!(RunConfig::parse("speed = 0.1\n").is_err());
    }

    #[test]
    fn s_q_is_mrt_only() {
        let cfg = RunConfig::parse("[scheme]\nkind = \"bgk\"\ns_q = 1.2\n").unwrap();
        assert!(cfg.scheme.build().is_err());
    }

    #[test]
    fn tables_accept_targets() {
        let cfg = RunConfig::parse("[tables]\nwhich = [\"table1\", \"fig2to5\"]\n").unwrap();
        assert_eq!(cfg.tables.which, vec![Target::Table1, Target::Fig2to5]);
        assert!(RunConfig::parse("[tables]\nwhich = [\"table7\"]\n").is_err());
    }

    #[test]
    fn modes_parse() {
        assert_eq!(parse_mode("singlet-3").unwrap(), StokesMode::Singlet { l: 3 });
        assert!(parse_mode("triplet-1").is_err());
        assert!(parse_mode("singlet").is_err());
    }
}
