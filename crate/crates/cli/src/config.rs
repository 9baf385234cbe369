//! TOML run configuration.
//!
//! Every key is optional; an empty document yields the default run. The
//! defaults are the entrance parameters `theta1 = 15`, `theta2 = 13.5`,
//! `beta = 7` with `alpha = 0.01` and `gamma = 0.04`.
//!
//! ```toml
//! [pulses]
//! theta1 = 15.0
//! theta2 = 13.5
//! beta = 7.0
//!
//! [medium]
//! alpha = 0.01
//! gamma = 0.04
//! delta1 = 0.0
//! delta2 = 0.0
//! initial_state = "state2"
//!
//! [grid]
//! tau_min = -6.0
//! tau_max = 8.0
//! n_tau = 2801
//! xi_max = 60.0
//! n_xi = 240
//! store_every = 4
//! scheme = "heun"
//!
//! [output]
//! storage = "full"
//! tau_stride = 1
//!
//! [analysis]
//! quadratic_s_window = [-3.0, 3.0]
//! quadratic_a_window = [-4.0, -1.5]
//! saturating_a_window = [-1.5, 4.0]
//! transparency_xi = 6.0
//! reference_xi = 40.0
//! tau_sigma_s = 0.5e-9
//! lifetime_s = 26.235e-9
//! ```

use std::path::Path;

use chirpmatch_core::bloch::AtomParams;
use chirpmatch_core::fields::Grid;
use chirpmatch_core::propagation::{InitialState, SimulationConfig, SpatialScheme, StorageMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulsesSection {
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub alpha: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub initial_state: InitialState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub xi_max: f64,
    pub n_xi: usize,
    pub store_every: usize,
    pub scheme: SpatialScheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub storage: StorageMode,
    /// Write every `tau_stride`-th tau sample to the per-sample tables.
    pub tau_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub quadratic_s_window: [f64; 2],
    pub quadratic_a_window: [f64; 2],
    pub saturating_a_window: [f64; 2],
    /// Depth beyond which the medium is expected to be transparent.
    pub transparency_xi: f64,
    /// Depth used for the in-medium comparisons.
    pub reference_xi: f64,
    pub tau_sigma_s: f64,
    pub lifetime_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pulses: PulsesSection,
    pub medium: MediumSection,
    pub grid: GridSection,
    pub output: OutputSection,
    pub analysis: AnalysisSection,
}

impl Default for PulsesSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            theta1: d.theta1,
            theta2: d.theta2,
            beta: d.beta,
        }
    }
}

impl Default for MediumSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            alpha: d.alpha,
            gamma: d.atom.gamma,
            delta1: d.atom.delta1,
            delta2: d.atom.delta2,
            initial_state: d.initial_state,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let g = Grid::default();
        Self {
            tau_min: g.tau_min,
            tau_max: g.tau_max,
            n_tau: g.n_tau,
            xi_max: g.xi_max,
            n_xi: g.n_xi,
            store_every: g.store_every,
            scheme: SpatialScheme::default(),
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            storage: StorageMode::Full,
            tau_stride: 1,
        }
    }
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            quadratic_s_window: [-3.0, 3.0],
            quadratic_a_window: [-4.0, -1.5],
            saturating_a_window: [-1.5, 4.0],
            transparency_xi: 6.0,
            reference_xi: 40.0,
            tau_sigma_s: 0.5e-9,
            lifetime_s: 26.235e-9,
        }
    }
}

impl RunConfig {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            theta1: self.pulses.theta1,
            theta2: self.pulses.theta2,
            beta: self.pulses.beta,
            alpha: self.medium.alpha,
            atom: AtomParams {
                gamma: self.medium.gamma,
                delta1: self.medium.delta1,
                delta2: self.medium.delta2,
            },
            grid: Grid {
                tau_min: self.grid.tau_min,
                tau_max: self.grid.tau_max,
                n_tau: self.grid.n_tau,
                xi_max: self.grid.xi_max,
                n_xi: self.grid.n_xi,
                store_every: self.grid.store_every,
            },
            initial_state: self.medium.initial_state.clone(),
            storage: self.output.storage,
            scheme: self.grid.scheme,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        if self.output.tau_stride == 0 {
            return Err(CliError::Invalid("output.tau_stride must be at least 1".into()));
        }
        let a = &self.analysis;
        for (name, w) in [
            ("analysis.quadratic_s_window", a.quadratic_s_window),
            ("analysis.quadratic_a_window", a.quadratic_a_window),
            ("analysis.saturating_a_window", a.saturating_a_window),
        ] {
            if w[0].is_nan() || w[1].is_nan() || w[0] >= w[1] {
                return Err(CliError::Invalid(format!("{name} must be increasing, got {w:?}")));
            }
        }
        if a.tau_sigma_s.is_nan() || a.tau_sigma_s <= 0.0 {
            return Err(CliError::Invalid("analysis.tau_sigma_s must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; independent of key order in the
    /// source document.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Parses a TOML document, reporting schema errors with their key path.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Schema {
        path: String::new(),
        message: e.message().to_string(),
    })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}
