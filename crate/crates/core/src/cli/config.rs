//! Run configuration: one TOML file, strictly parsed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::ModelId;
use crate::error::{Error, Result};
use crate::grid::{make_grid, SeedSpec, TimeGrid};
use crate::localtime::Representation;
use crate::payoff::{PayoffKind, WeightFunction};
use crate::sensitivity::DeltaOptions;
use crate::solver::{InitialFlow, PicardConfig};

pub const MAX_PARTICLES: usize = 10_000_000;
pub const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFlowKind {
    Dirac,
    Brownian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialFlowKind,
}

fn default_tolerance() -> f64 {
    1e-3
}
fn default_max_iterations() -> usize {
    50
}
fn default_initial() -> InitialFlowKind {
    InitialFlowKind::Dirac
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            initial: default_initial(),
        }
    }
}

impl PicardSection {
    pub fn to_config(&self) -> PicardConfig {
        PicardConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            initial: match self.initial {
                InitialFlowKind::Dirac => InitialFlow::DiracAtX,
                InitialFlowKind::Brownian => InitialFlow::BrownianLaw,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Picard,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<SolverKind>,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    /// Order `p` of the moment diagnostics.
    #[serde(default = "default_moment")]
    pub moment_p: f64,
}

fn default_methods() -> Vec<SolverKind> {
    vec![SolverKind::Picard]
}
fn default_quantiles() -> Vec<f64> {
    vec![0.05, 0.5, 0.95]
}
fn default_moment() -> f64 {
    2.0
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            quantiles: default_quantiles(),
            moment_p: default_moment(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Bel,
    Pathwise,
    Fd,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Bel => "bel",
            EstimatorKind::Pathwise => "pathwise",
            EstimatorKind::Fd => "fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_payoff")]
    pub payoff: PayoffKind,
    #[serde(default = "default_weight")]
    pub weight: WeightFunction,
    #[serde(default)]
    pub representation: Representation,
    /// Bump of the finite-difference baseline.
    #[serde(default = "default_fd_bump")]
    pub fd_bump: f64,
    /// Bump of the law derivative; `1e-2 (1 + |x|)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law_bump: Option<f64>,
    #[serde(default = "default_ceiling")]
    pub se_ceiling: f64,
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Bel, EstimatorKind::Pathwise, EstimatorKind::Fd]
}
fn default_payoff() -> PayoffKind {
    PayoffKind::Identity
}
fn default_weight() -> WeightFunction {
    WeightFunction::Uniform
}
fn default_fd_bump() -> f64 {
    1e-2
}
fn default_ceiling() -> f64 {
    1.0
}

impl Default for DeltaSection {
    fn default() -> Self {
        Self {
            estimators: default_estimators(),
            payoff: default_payoff(),
            weight: default_weight(),
            representation: Representation::default(),
            fd_bump: default_fd_bump(),
            law_bump: None,
            se_ceiling: default_ceiling(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Mollification levels `n`.
    #[serde(default = "default_mollifiers")]
    pub mollifiers: Vec<u32>,
    /// Step counts for the local-time oracle sweep.
    #[serde(default = "default_step_list")]
    pub step_list: Vec<usize>,
    /// Particle counts for the standard-error sweep.
    #[serde(default = "default_particle_list")]
    pub particle_list: Vec<usize>,
    /// Paths in the local-time oracle sweep.
    #[serde(default = "default_oracle_paths")]
    pub oracle_paths: usize,
}

fn default_mollifiers() -> Vec<u32> {
    vec![4, 16, 64, 256]
}
fn default_step_list() -> Vec<usize> {
    vec![100, 200, 400, 800]
}
fn default_particle_list() -> Vec<usize> {
    vec![1000, 2000, 4000, 8000]
}
fn default_oracle_paths() -> usize {
    1000
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            mollifiers: default_mollifiers(),
            step_list: default_step_list(),
            particle_list: default_particle_list(),
            oracle_paths: default_oracle_paths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelId,
    pub x: f64,
    pub horizon: f64,
    pub steps: usize,
    pub particles: usize,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub delta: DeltaSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn bad(key: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {reason}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded. The output
    /// directory is not part of the experiment and is left out.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output = default_output();
        Ok(hex::encode(Sha256::digest(canonical.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() {
            return Err(bad("x", "must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(bad("horizon", "must be positive"));
        }
        if self.steps == 0 || self.steps > MAX_STEPS {
            return Err(bad("steps", format!("must lie in 1..={MAX_STEPS}")));
        }
        if self.particles < 2 || self.particles > MAX_PARTICLES {
            return Err(bad("particles", format!("must lie in 2..={MAX_PARTICLES}")));
        }
        if !(self.picard.tolerance > 0.0 && self.picard.tolerance.is_finite()) {
            return Err(bad("picard.tolerance", "must be positive"));
        }
        if self.picard.max_iterations == 0 {
            return Err(bad("picard.max_iterations", "must be at least 1"));
        }
        if self.simulate.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(bad("simulate.quantiles", "must lie in [0, 1]"));
        }
        if !(self.simulate.moment_p >= 1.0) {
            return Err(bad("simulate.moment_p", "must be at least 1"));
        }
        if !(self.delta.fd_bump > 0.0 && self.delta.fd_bump.is_finite()) {
            return Err(bad("delta.fd_bump", "must be positive"));
        }
        if let Some(h) = self.delta.law_bump {
            if !(h > 0.0 && h.is_finite()) {
                return Err(bad("delta.law_bump", "must be positive"));
            }
        }
        if !(self.delta.se_ceiling > 0.0) {
            return Err(bad("delta.se_ceiling", "must be positive"));
        }
        if self.convergence.mollifiers.contains(&0) {
            return Err(bad("convergence.mollifiers", "levels must be positive"));
        }
        if self.convergence.step_list.iter().any(|&m| m == 0 || m > MAX_STEPS) {
            return Err(bad("convergence.step_list", format!("entries must lie in 1..={MAX_STEPS}")));
        }
        if self.convergence.particle_list.iter().any(|n| !(2..=MAX_PARTICLES).contains(n)) {
            return Err(bad("convergence.particle_list", format!("entries must lie in 2..={MAX_PARTICLES}")));
        }
        if self.convergence.oracle_paths == 0 || self.convergence.oracle_paths > MAX_PARTICLES {
            return Err(bad("convergence.oracle_paths", format!("must lie in 1..={MAX_PARTICLES}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        make_grid(self.horizon, self.steps)
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed)
    }

    pub fn delta_options(&self) -> DeltaOptions {
        DeltaOptions {
            weight: self.delta.weight,
            representation: self.delta.representation,
            law_bump: self.delta.law_bump,
            law_particles: None,
            se_ceiling: self.delta.se_ceiling,
            picard: self.picard.to_config(),
        }
    }
}
