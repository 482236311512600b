//! Run configuration files: TOML with `[grid]`, `[solver]`, `[initial_data]`
//! and `[diagnostics]` sections. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{NsgError, Result};
use crate::field::VelocityField;
use crate::grid::Grid;
use crate::init::{power_law_velocity, random_velocity, taylor_green, AmplitudeModel, RandomDataSpec};
use crate::lp::Exponent;
use crate::mild::SolverConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Step,
    Picard,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub substeps_quadrature: usize,
    #[serde(default = "two_thirds")]
    pub dealias_fraction: f64,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_iters")]
    pub picard_max_iters: usize,
    #[serde(default = "default_smallness")]
    pub smallness_threshold: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub method: Method,
}

fn one() -> usize {
    1
}
fn two_thirds() -> f64 {
    crate::spectral::TWO_THIRDS
}
fn default_tol() -> f64 {
    1e-10
}
fn default_iters() -> usize {
    50
}
fn default_smallness() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    TaylorGreen,
    Random,
    PowerLaw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSection {
    pub kind: InitialKind,
    /// Taylor-Green amplitude.
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub target_norm: Option<f64>,
    #[serde(default)]
    pub kmax: Option<f64>,
    #[serde(default)]
    pub dealias: Option<bool>,
    #[serde(default)]
    pub amplitudes: Option<AmplitudeModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: Exponent,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Depth of the time-derivative stacks stored with the run (0 = none).
    #[serde(default)]
    pub derivative_depth: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection { p: default_p(), q: default_q(), kappa: default_kappa(), derivative_depth: 0 }
    }
}

fn default_p() -> f64 {
    2.0
}
fn default_q() -> Exponent {
    Exponent::Finite(2.0)
}
fn default_kappa() -> f64 {
    crate::diagnostics::DEFAULT_KAPPA
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial_data: InitialDataSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| NsgError::Config {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.solver_config()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::parse(&src)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n).map_err(|e| NsgError::Config { line: None, message: e.to_string() })
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig {
            grid: self.grid()?,
            t_final: s.t_final,
            steps: s.steps,
            substeps_quadrature: s.substeps_quadrature,
            dealias_fraction: s.dealias_fraction,
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            smallness_threshold: s.smallness_threshold,
            record_every: s.record_every,
            norm_p: self.diagnostics.p,
            norm_q: self.diagnostics.q,
        };
        cfg.validate().map_err(|e| NsgError::Config { line: None, message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn seed(&self) -> Option<u64> {
        (self.initial_data.kind == InitialKind::Random).then(|| self.initial_data.seed.unwrap_or(0))
    }

    pub fn initial_velocity(&self) -> Result<VelocityField> {
        let grid = self.grid()?;
        let d = &self.initial_data;
        let bad = |m: &str| NsgError::Config { line: None, message: m.to_string() };
        match d.kind {
            InitialKind::Zero => Ok(VelocityField::zeros(grid)),
            InitialKind::TaylorGreen => taylor_green(grid, d.amplitude.unwrap_or(1.0)),
            InitialKind::PowerLaw => {
                let u = power_law_velocity(grid, d.sigma.unwrap_or(3.0))?;
                match d.target_norm {
                    Some(target) => {
                        let bank = crate::lp::build_filter_bank(&grid);
                        let spec = crate::lp::NormSpec::critical(self.diagnostics.p, self.diagnostics.q)?;
                        let norm = crate::lp::besov_norm(&u, &spec, &bank)?;
                        VelocityField::new(u.scale(target / norm))
                    }
                    None => Ok(u),
                }
            }
            InitialKind::Random => {
                let mut spec = RandomDataSpec::new(d.seed.unwrap_or(0), d.sigma.unwrap_or(2.0));
                spec.target_norm = d.target_norm;
                spec.kmax = d.kmax;
                spec.p = self.diagnostics.p;
                spec.q = self.diagnostics.q;
                if d.dealias.unwrap_or(false) {
                    spec.dealias_fraction = Some(self.solver.dealias_fraction);
                }
                spec.amplitudes = d.amplitudes.unwrap_or_default();
                if spec.target_norm.is_some_and(|t| t < 0.0) {
                    return Err(bad("target_norm must be nonnegative"));
                }
                random_velocity(grid, &spec)
            }
        }
    }
}
