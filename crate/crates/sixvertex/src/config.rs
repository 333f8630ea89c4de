//! JSON run configuration.
//!
//! One file holds a block per subcommand; every block and every field is optional and
//! falls back to the defaults below. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "workers": 4,
//!   "free_energy": { "q": 0.4, "h": 0.05, "u": 0.3 },
//!   "evolve": { "surface": "surface.txt", "v": { "sine": { "mean": 0.0, "amplitude": 0.05 } } }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sixvertex_core::commute::HessianSource;
use sixvertex_core::flow::Profile;
use sixvertex_core::kernels::Sign;
use sixvertex_core::thermo::ThermoOptions;

use crate::error::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub check_kernels: KernelsSection,
    #[serde(default)]
    pub xfer_eigen: XferSection,
    #[serde(default)]
    pub bethe_solve: BetheSection,
    #[serde(default)]
    pub free_energy: FreeEnergySection,
    #[serde(default)]
    pub verify_identities: IdentitiesSection,
    #[serde(default)]
    pub build_surface: SurfaceSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub minimize_action: ActionSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            workers: None,
            check_kernels: KernelsSection::default(),
            xfer_eigen: XferSection::default(),
            bethe_solve: BetheSection::default(),
            free_energy: FreeEnergySection::default(),
            verify_identities: IdentitiesSection::default(),
            build_surface: SurfaceSection::default(),
            evolve: EvolveSection::default(),
            minimize_action: ActionSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> AppResult<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| AppError::Config { path: path.to_path_buf(), msg: e.to_string() })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(AppError::Config {
                path: path.to_path_buf(),
                msg: format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Spatial or temporal profile: `{"constant": 0.4}` or `{"sine": {"mean": .., "amplitude": ..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant(f64),
    Sine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        period: f64,
        #[serde(default)]
        phase: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ProfileConfig {
    pub fn to_profile(self) -> AppResult<Profile> {
        match self {
            ProfileConfig::Constant(c) if c.is_finite() => Ok(Profile::Constant(c)),
            ProfileConfig::Sine { mean, amplitude, period, phase }
                if period > 0.0 && [mean, amplitude, period, phase].iter().all(|x| x.is_finite()) =>
            {
                Ok(Profile::Sine { mean, amplitude, period, phase })
            }
            other => Err(AppError::Invalid(format!("bad profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceConfig {
    ClosedForm,
    FiniteDifference,
}

impl From<SourceConfig> for HessianSource {
    fn from(s: SourceConfig) -> Self {
        match s {
            SourceConfig::ClosedForm => HessianSource::ClosedForm,
            SourceConfig::FiniteDifference => HessianSource::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchConfig {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl From<BranchConfig> for Sign {
    fn from(b: BranchConfig) -> Self {
        match b {
            BranchConfig::Plus => Sign::Plus,
            BranchConfig::Minus => Sign::Minus,
        }
    }
}

/// Nyström and Newton controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoConfig {
    pub m_nodes: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub h_step: f64,
}

impl Default for ThermoConfig {
    fn default() -> Self {
        let d = ThermoOptions::default();
        Self { m_nodes: d.m_nodes, newton_tol: d.newton_tol, max_newton: d.max_newton, h_step: d.h_step }
    }
}

impl ThermoConfig {
    pub fn with_nodes(m_nodes: usize) -> Self {
        Self { m_nodes, ..Self::default() }
    }

    pub fn to_options(self) -> AppResult<ThermoOptions> {
        if self.m_nodes < 8 || !(self.newton_tol > 0.0) || self.max_newton == 0 || !(self.h_step > 0.0) {
            return Err(AppError::Invalid(format!("bad thermo options {self:?}")));
        }
        Ok(ThermoOptions { m_nodes: self.m_nodes, newton_tol: self.newton_tol, max_newton: self.max_newton, h_step: self.h_step })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsSection {
    pub eta: f64,
    pub u: f64,
    pub h: f64,
    /// Real parts of the sample points `α`.
    pub alphas: Vec<f64>,
    /// Common imaginary part of the sample points.
    pub imag: f64,
    /// Second spectral parameter of the Yang–Baxter check.
    pub w: f64,
}

impl Default for KernelsSection {
    fn default() -> Self {
        Self { eta: 1.0, u: 0.4, h: 0.05, alphas: vec![-1.2, -0.6, 0.0, 0.3, 0.7, 1.2], imag: 0.1, w: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XferSection {
    pub eta: f64,
    pub u: f64,
    pub h: f64,
    pub v_field: f64,
    pub n_sites: usize,
    /// Sectors to diagonalize; all of `0..=n_sites` when empty.
    pub sectors: Vec<usize>,
    /// Column inhomogeneities `v_k = a sin(2π(k+1)/N)`.
    pub v_amplitude: f64,
    pub tol: f64,
}

impl Default for XferSection {
    fn default() -> Self {
        Self { eta: 1.0, u: 0.4, h: 0.0, v_field: 0.0, n_sites: 8, sectors: Vec::new(), v_amplitude: 0.0, tol: 1e-13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetheSection {
    pub eta: f64,
    pub u: f64,
    pub h: f64,
    pub n_sites: usize,
    pub n: usize,
    pub v_amplitude: f64,
    pub tol: f64,
    /// Also diagonalize the sector and report the relative difference.
    pub compare: bool,
}

impl Default for BetheSection {
    fn default() -> Self {
        Self { eta: 1.0, u: 0.4, h: 0.05, n_sites: 8, n: 4, v_amplitude: 0.0, tol: 1e-13, compare: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeEnergySection {
    pub eta: f64,
    pub q: f64,
    pub h: f64,
    pub u: f64,
    pub thermo: ThermoConfig,
}

impl Default for FreeEnergySection {
    fn default() -> Self {
        Self { eta: 1.0, q: 0.4, h: 0.05, u: 0.3, thermo: ThermoConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesSection {
    pub eta: f64,
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    /// Cartesian product `u × w` unless `pairs` is given.
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub pairs: Option<Vec<(f64, f64)>>,
    pub source: SourceConfig,
    pub thermo: ThermoConfig,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            q: vec![0.3, 0.35, 0.4, 0.45, 0.5],
            h: vec![-0.1, -0.05, 0.0, 0.05, 0.1],
            u: vec![0.25, 0.3, 0.35],
            w: vec![0.4, 0.45, 0.5],
            pairs: None,
            source: SourceConfig::ClosedForm,
            thermo: ThermoConfig::with_nodes(256),
        }
    }
}

impl IdentitiesSection {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => self.u.iter().flat_map(|&u| self.w.iter().map(move |&w| (u, w))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub eta: f64,
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub u_range: (f64, f64),
    pub ns: usize,
    pub nt: usize,
    pub nu: usize,
    pub branch: BranchConfig,
    pub thermo: ThermoConfig,
    /// Off-grid points checked against direct evaluation after the build.
    pub validation_probes: usize,
    pub output: PathBuf,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            s_range: (0.35, 0.45),
            t_range: (0.21, 0.39),
            u_range: (0.25, 0.55),
            ns: 10,
            nt: 10,
            nu: 40,
            branch: BranchConfig::Plus,
            thermo: ThermoConfig::with_nodes(256),
            validation_probes: 20,
            output: PathBuf::from("surface.txt"),
        }
    }
}

/// Initial data: the stationary state for `(s0, π0)` plus `eps` in Fourier mode `mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialStateConfig {
    pub l: f64,
    pub g: usize,
    pub s0: f64,
    pub pi0: f64,
    pub eps: f64,
    pub mode: usize,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self { l: 1.0, g: 256, s0: 0.4, pi0: 0.3, eps: 5e-8, mode: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub surface: PathBuf,
    pub initial: InitialStateConfig,
    pub u: ProfileConfig,
    pub v: ProfileConfig,
    pub dy: f64,
    pub y_end: f64,
    pub probes: Vec<f64>,
    pub mode_cutoff: Option<usize>,
    pub record_every: usize,
    pub margin: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            surface: PathBuf::from("surface.txt"),
            initial: InitialStateConfig::default(),
            u: ProfileConfig::Constant(0.4),
            v: ProfileConfig::Sine { mean: 0.0, amplitude: 0.05, period: 1.0, phase: 0.0 },
            dy: 1e-3,
            y_end: 1.0,
            probes: vec![0.3, 0.35, 0.45, 0.5],
            mode_cutoff: Some(1),
            record_every: 100,
            margin: 0.02,
        }
    }
}

/// Boundary rows come from a flow of `initial` over `[0, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSection {
    pub surface: PathBuf,
    pub initial: InitialStateConfig,
    pub u: f64,
    pub v: ProfileConfig,
    pub t_end: f64,
    pub ny: usize,
    /// Steps of the flow that produces the top row, also used for the reconstruction.
    pub flow_steps: usize,
    pub mode_cutoff: Option<usize>,
    pub margin: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ActionSection {
    fn default() -> Self {
        Self {
            surface: PathBuf::from("surface.txt"),
            initial: InitialStateConfig { g: 64, eps: 1e-4, ..InitialStateConfig::default() },
            u: 0.4,
            v: ProfileConfig::Sine { mean: 0.0, amplitude: 0.05, period: 1.0, phase: 0.0 },
            t_end: 0.1,
            ny: 64,
            flow_steps: 256,
            mode_cutoff: Some(2),
            margin: 0.02,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}
