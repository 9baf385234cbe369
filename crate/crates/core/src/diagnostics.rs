//! Post-processing of a propagation run.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{fields_to_sa, rho_to_sa, unwrap_phase, PhaseJump, PhaseTrack, SABasis};
use crate::error::{Error, Result};
use crate::fields::{trapezoid, SaFieldSlice};
use crate::propagation::{SimulationConfig, SimulationResult};

/// Phase samples are trusted where the modulus exceeds this fraction of the
/// largest coupling in the slice.
pub const AMPLITUDE_FLOOR_FRACTION: f64 = 1e-4;

/// Trapezoidal `integral |Omega| d tau` on a uniform grid.
pub fn pulse_area(amplitudes: &[f64], d_tau: f64) -> f64 {
    trapezoid(amplitudes.iter().map(|a| a.abs()), d_tau)
}

/// Final state of one depth in the bare and the symmetric-antisymmetric
/// basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub xi: f64,
    /// `(rho00, rho11, rho22)`
    pub bare: [f64; 3],
    /// `(P0, P_s, P_a)`
    pub sa: [f64; 3],
    pub max_excitation: f64,
    pub rho12: C64,
}

impl PopulationSummary {
    pub fn p_s(&self) -> f64 {
        self.sa[1]
    }

    pub fn p_a(&self) -> f64 {
        self.sa[2]
    }
}

/// Populations at `tau_max` for every stored depth.
pub fn final_populations(result: &SimulationResult, basis: &SABasis) -> Vec<PopulationSummary> {
    result
        .slices
        .iter()
        .map(|s| {
            let rho = &s.final_state;
            PopulationSummary {
                xi: s.xi,
                bare: rho.populations(),
                sa: rho_to_sa(rho, basis).populations(),
                max_excitation: s.max_excitation,
                rho12: rho.get(1, 2),
            }
        })
        .collect()
}

/// `(xi, max_tau rho00)` for every stored depth.
pub fn excitation_profile(result: &SimulationResult) -> Vec<(f64, f64)> {
    result.slices.iter().map(|s| (s.xi, s.max_excitation)).collect()
}

/// Absolute amplitude floor used for phase analysis of a slice.
pub fn amplitude_floor(sa: &SaFieldSlice) -> f64 {
    (AMPLITUDE_FLOOR_FRACTION * sa.max_amplitude()).max(f64::MIN_POSITIVE)
}

/// Unwrapped phase of one coupling, or a flat track when the coupling
/// never rises above `floor`.
pub fn coupling_phase(tau: &[f64], series: &[C64], floor: f64) -> Result<PhaseTrack> {
    if series.iter().all(|z| z.norm() < floor) {
        return Ok(PhaseTrack::flat(tau));
    }
    unwrap_phase(tau, series, floor)
}

/// Phase tracks of `Omega_s` and `Omega_a` sharing one floor.
pub fn sa_phase_tracks(tau: &[f64], sa: &SaFieldSlice) -> Result<(PhaseTrack, PhaseTrack)> {
    let floor = amplitude_floor(sa);
    Ok((
        coupling_phase(tau, &sa.omega_s, floor)?,
        coupling_phase(tau, &sa.omega_a, floor)?,
    ))
}

/// Pi-jumps in `arg Omega_a` of one slice.
pub fn phase_jump_census(tau: &[f64], sa: &SaFieldSlice) -> Result<Vec<PhaseJump>> {
    let floor = amplitude_floor(sa);
    Ok(coupling_phase(tau, &sa.omega_a, floor)?.jumps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub xi: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_s: f64,
    pub e_a: f64,
    /// Energy removed from both pulses since the entrance.
    pub deposited: f64,
}

/// `E_k = integral |Omega_k|^2 d tau` per stored depth.
pub fn energy_ledger(result: &SimulationResult, basis: &SABasis) -> Vec<LedgerRecord> {
    let d_tau = result.config.grid.d_tau();
    let energy = |v: &[C64]| trapezoid(v.iter().map(|z| z.norm_sqr()), d_tau);
    let mut entrance: Option<(f64, f64)> = None;
    result
        .slices
        .iter()
        .map(|s| {
            let sa = fields_to_sa(&s.fields, basis);
            let e1 = energy(&s.fields.omega1);
            let e2 = energy(&s.fields.omega2);
            let (e1_0, e2_0) = *entrance.get_or_insert((e1, e2));
            LedgerRecord {
                xi: s.xi,
                e1,
                e2,
                e_s: energy(&sa.omega_s),
                e_a: energy(&sa.omega_a),
                deposited: (e1_0 - e1) + (e2_0 - e2),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeCheck {
    /// `50 tau_sigma`, the excited-state lifetime assumed by the model.
    pub model_lifetime_s: f64,
    pub supplied_lifetime_s: f64,
    pub relative_deviation: f64,
}

/// Angular-frequency reading of the dimensionless parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub tau_sigma_s: f64,
    /// `theta_k / tau_sigma` for both pulses.
    pub peak_rabi_rad_per_s: [f64; 2],
    pub chirp_rad_per_s2: f64,
    /// Full width at half maximum of the entrance intensity `exp(-tau^2)`.
    pub pulse_fwhm_s: f64,
    pub lifetime_check: LifetimeCheck,
}

pub const MODEL_LIFETIME_TAU_SIGMA: f64 = 50.0;

pub fn to_physical_units(
    config: &SimulationConfig,
    tau_sigma_seconds: f64,
    lifetime_seconds: f64,
) -> Result<PhysicalUnits> {
    if !(tau_sigma_seconds > 0.0 && tau_sigma_seconds.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tau_sigma must be positive, got {tau_sigma_seconds}"
        )));
    }
    let model = MODEL_LIFETIME_TAU_SIGMA * tau_sigma_seconds;
    Ok(PhysicalUnits {
        tau_sigma_s: tau_sigma_seconds,
        peak_rabi_rad_per_s: [config.theta1 / tau_sigma_seconds, config.theta2 / tau_sigma_seconds],
        chirp_rad_per_s2: config.beta / (tau_sigma_seconds * tau_sigma_seconds),
        pulse_fwhm_s: 2.0 * std::f64::consts::LN_2.sqrt() * tau_sigma_seconds,
        lifetime_check: LifetimeCheck {
            model_lifetime_s: model,
            supplied_lifetime_s: lifetime_seconds,
            relative_deviation: (model - lifetime_seconds).abs() / lifetime_seconds.abs(),
        },
    })
}

/// Population standard deviation of the final `P_s` over depths inside
/// `[xi_lo, xi_hi]`.
pub fn final_ps_spread(summaries: &[PopulationSummary], xi_lo: f64, xi_hi: f64) -> Result<f64> {
    let values: Vec<f64> = summaries
        .iter()
        .filter(|s| s.xi >= xi_lo && s.xi <= xi_hi)
        .map(PopulationSummary::p_s)
        .collect();
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}
