//! Coupled atom-field marching through the medium.
//!
//! At every depth the atoms are re-initialised in the `tau -> -inf` state
//! and driven by the local fields; their optical coherences then advance the
//! fields by one spatial step. Stepping is causal in `xi`, so the driver is
//! strictly sequential.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::{evolve_slice, AtomParams, DensityMatrix, SliceEvolution};
use crate::error::{Error, Result};
use crate::fields::{FieldSlice, Grid};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// All atoms in metastable level `|2>`.
    #[default]
    State2,
    Custom(DensityMatrix),
}

impl InitialState {
    pub fn density_matrix(&self) -> DensityMatrix {
        match self {
            InitialState::State2 => DensityMatrix::level(2),
            InitialState::Custom(rho) => *rho,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    /// Keep the full `rho(tau)` trajectory of every stored slice.
    #[default]
    Full,
    /// Keep fields plus final-state summaries only.
    Lean,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialScheme {
    Euler,
    /// Euler predictor, atoms re-evolved in the predicted fields, averaged source.
    #[default]
    Heun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Peak Rabi amplitude of pulse 1 at the entrance.
    pub theta1: f64,
    pub theta2: f64,
    /// Chirp speed; the entrance phase is `-beta tau^2`.
    pub beta: f64,
    /// Medium-field coupling constant.
    pub alpha: f64,
    pub atom: AtomParams,
    pub grid: Grid,
    pub initial_state: InitialState,
    pub storage: StorageMode,
    pub scheme: SpatialScheme,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            theta1: 15.0,
            theta2: 13.5,
            beta: 7.0,
            // tau_sigma / (2 T) with T = 50 tau_sigma
            alpha: 0.01,
            atom: AtomParams::default(),
            grid: Grid::default(),
            initial_state: InitialState::default(),
            storage: StorageMode::default(),
            scheme: SpatialScheme::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.atom.validate()?;
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        if self.theta1 == 0.0 && self.theta2 == 0.0 {
            return Err(Error::InvalidConfig(
                "theta1 and theta2 cannot both be zero".into(),
            ));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be finite".into()));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.theta1.hypot(self.theta2)
    }
}

/// `Omega_k(0, tau) = theta_k exp(-tau^2 (1/2 + i beta))` on the grid.
pub fn boundary_fields(config: &SimulationConfig) -> FieldSlice {
    let grid = &config.grid;
    let envelope: Vec<C64> = (0..grid.n_tau)
        .map(|i| {
            let t = grid.tau(i);
            (-(t * t) * C64::new(0.5, config.beta)).exp()
        })
        .collect();
    FieldSlice {
        omega1: envelope.iter().map(|e| e * config.theta1).collect(),
        omega2: envelope.iter().map(|e| e * config.theta2).collect(),
    }
}

/// Optical coherences `<0|rho|k>` along tau: the polarisation driving pulse `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coherences {
    pub rho01: Vec<C64>,
    pub rho02: Vec<C64>,
}

impl Coherences {
    pub fn from_evolution(evo: &SliceEvolution) -> Self {
        Self {
            rho01: evo.coherence(1),
            rho02: evo.coherence(2),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.rho01.len() != n || self.rho02.len() != n {
            return Err(Error::LengthMismatch {
                what: "coherences",
                expected: n,
                got: self.rho01.len().min(self.rho02.len()),
            });
        }
        let bad = self
            .rho01
            .iter()
            .zip(&self.rho02)
            .position(|(a, b)| !(a.is_finite() && b.is_finite()));
        match bad {
            Some(index) => Err(Error::NonFiniteCoherence { index }),
            None => Ok(()),
        }
    }
}

/// `d Omega_k / d xi = i alpha <0|rho|k>` sampled along tau.
pub fn field_derivative(coherences: &Coherences, alpha: f64) -> Result<FieldSlice> {
    coherences.check(coherences.rho01.len())?;
    let scale = I * alpha;
    Ok(FieldSlice {
        omega1: coherences.rho01.iter().map(|r| r * scale).collect(),
        omega2: coherences.rho02.iter().map(|r| r * scale).collect(),
    })
}

/// One explicit Euler step of the field equation.
pub fn field_step(
    fields: &FieldSlice,
    coherences: &Coherences,
    alpha: f64,
    d_xi: f64,
) -> Result<FieldSlice> {
    coherences.check(fields.len())?;
    let slope = field_derivative(coherences, alpha)?;
    Ok(axpy(fields, &slope, d_xi))
}

fn axpy(base: &FieldSlice, slope: &FieldSlice, h: f64) -> FieldSlice {
    let add = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x + y * h).collect();
    FieldSlice {
        omega1: add(&base.omega1, &slope.omega1),
        omega2: add(&base.omega2, &slope.omega2),
    }
}

/// One stored depth.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceRecord {
    pub xi: f64,
    pub fields: FieldSlice,
    /// Present in [`StorageMode::Full`] only.
    pub trajectory: Option<Vec<DensityMatrix>>,
    pub final_state: DensityMatrix,
    pub max_excitation: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub rk4_steps: u64,
    pub slice_evolutions: u64,
    pub xi_steps: u64,
    pub max_trace_deviation: f64,
    pub max_positivity_deficit: f64,
}

impl IntegratorMeta {
    fn absorb(&mut self, evo: &SliceEvolution) {
        self.rk4_steps += evo.steps as u64;
        self.slice_evolutions += 1;
        self.max_trace_deviation = self.max_trace_deviation.max(evo.max_trace_deviation);
        self.max_positivity_deficit = self.max_positivity_deficit.max(evo.max_positivity_deficit);
    }

    /// Whether the density-matrix invariants held at every node.
    pub fn invariants_hold(&self) -> bool {
        self.max_trace_deviation <= crate::bloch::TRACE_TOLERANCE
            && self.max_positivity_deficit <= crate::bloch::POSITIVITY_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub slices: Vec<SliceRecord>,
    pub meta: IntegratorMeta,
}

impl SimulationResult {
    pub fn xi_values(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.xi).collect()
    }

    /// Stored slice closest to `xi`.
    pub fn slice_near(&self, xi: f64) -> &SliceRecord {
        self.slices
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
            .expect("result holds at least the entrance slice")
    }

    pub fn tau_axis(&self) -> Vec<f64> {
        self.config.grid.tau_axis()
    }
}

fn record(xi: f64, fields: &FieldSlice, evo: &SliceEvolution, mode: StorageMode) -> SliceRecord {
    SliceRecord {
        xi,
        fields: fields.clone(),
        trajectory: match mode {
            StorageMode::Full => Some(evo.states.clone()),
            StorageMode::Lean => None,
        },
        final_state: *evo.final_state(),
        max_excitation: evo.max_excitation(),
    }
}

/// Marches the coupled system from `xi = 0` to `xi_max`.
pub fn propagate(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let grid = &config.grid;
    let rho0 = config.initial_state.density_matrix();
    let d_xi = grid.d_xi();
    let mut meta = IntegratorMeta::default();

    let evolve = |fields: &FieldSlice, xi: f64, meta: &mut IntegratorMeta| {
        let evo = evolve_slice(&rho0, fields, &config.atom, grid).map_err(|e| match e {
            Error::IntegrationFailure { tau, .. } => Error::IntegrationFailure { xi: Some(xi), tau },
            other => other,
        })?;
        meta.absorb(&evo);
        Ok::<_, Error>(evo)
    };

    let mut fields = boundary_fields(config);
    let mut evo = evolve(&fields, 0.0, &mut meta)?;
    let mut slices = Vec::with_capacity(grid.n_xi / grid.store_every + 2);
    slices.push(record(0.0, &fields, &evo, config.storage));

    for step in 1..=grid.n_xi {
        let xi = grid.xi(step);
        let source = Coherences::from_evolution(&evo);
        fields = match config.scheme {
            SpatialScheme::Euler => field_step(&fields, &source, config.alpha, d_xi)?,
            SpatialScheme::Heun => {
                let slope0 = field_derivative(&source, config.alpha)?;
                let predicted = axpy(&fields, &slope0, d_xi);
                let evo_pred = evolve(&predicted, xi, &mut meta)?;
                let slope1 = field_derivative(&Coherences::from_evolution(&evo_pred), config.alpha)?;
                let mean = FieldSlice {
                    omega1: slope0.omega1.iter().zip(&slope1.omega1).map(|(a, b)| (a + b) * 0.5).collect(),
                    omega2: slope0.omega2.iter().zip(&slope1.omega2).map(|(a, b)| (a + b) * 0.5).collect(),
                };
                axpy(&fields, &mean, d_xi)
            }
        };
        if let Some(index) = fields.first_non_finite() {
            return Err(Error::IntegrationFailure {
                xi: Some(xi),
                tau: grid.tau(index),
            });
        }
        evo = evolve(&fields, xi, &mut meta)?;
        meta.xi_steps += 1;
        if step % grid.store_every == 0 || step == grid.n_xi {
            slices.push(record(xi, &fields, &evo, config.storage));
        }
    }

    Ok(SimulationResult {
        config: config.clone(),
        slices,
        meta,
    })
}
