//! Maxwell-Bloch propagation of two Raman-resonant, frequency-chirped pulses
//! through a medium of three-level lambda atoms.
//!
//! Level `0` is the excited state, `1` and `2` are the ground states. Times
//! are retarded times in units of the pulse duration, depths are in
//! absorption lengths.

pub mod adiabatic;
pub mod basis;
pub mod bloch;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod fit;
pub mod propagation;

pub use nalgebra::Matrix3;
pub use num_complex::Complex64 as C64;

pub use adiabatic::{
    adiabaticity_margin, adiabaticity_margin_pair, dark_state_residual, eigentracks,
    rotating_hamiltonian, AdiabaticityMargin, Diabatic, EigenTracks,
};
pub use basis::{
    fields_from_sa, fields_to_sa, instantaneous_detuning, rho_from_sa, rho_to_sa, unwrap_phase,
    PhaseJump, PhaseTrack, SABasis,
};
pub use bloch::{evolve_slice, hamiltonian_rwa, master_rhs, AtomParams, DensityMatrix, SliceEvolution};
pub use diagnostics::{
    energy_ledger, excitation_profile, final_populations, phase_jump_census, pulse_area,
    to_physical_units, LedgerRecord, PhysicalUnits, PopulationSummary,
};
pub use error::{Error, Result};
pub use fields::{FieldSlice, Grid, SaFieldSlice};
pub use fit::{fit_quadratic_phase, fit_saturating_phase, FitModel, FitResult};
pub use propagation::{
    boundary_fields, field_step, propagate, InitialState, SimulationConfig, SimulationResult,
    SliceRecord, SpatialScheme, StorageMode,
};
