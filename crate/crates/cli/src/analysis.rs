//! Full diagnostics pass over a propagation result.

use std::collections::BTreeMap;

use chirpmatch_core::adiabatic::{
    adiabaticity_margin_pair, eigentracks, rotating_hamiltonian, EigenTracks,
};
use chirpmatch_core::basis::{fields_to_sa, rho_to_sa, unwrap_phase, PhaseJump, SABasis};
use chirpmatch_core::bloch::evolve_slice;
use chirpmatch_core::diagnostics::{
    amplitude_floor, energy_ledger, final_populations, final_ps_spread, pulse_area, sa_phase_tracks,
    to_physical_units, LedgerRecord, PhysicalUnits, PopulationSummary, AMPLITUDE_FLOOR_FRACTION,
};
use chirpmatch_core::fields::SaFieldSlice;
use chirpmatch_core::fit::{fit_quadratic_phase, fit_saturating_phase, FitResult};
use chirpmatch_core::propagation::{IntegratorMeta, SimulationResult};
use chirpmatch_core::{DensityMatrix, C64};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;

/// Samples on either side of a recorded jump searched for the amplitude
/// minimum.
const JUMP_NEIGHBOURHOOD: usize = 2;

pub struct SliceAnalysis {
    pub xi: f64,
    pub sa: SaFieldSlice,
    pub tracks: EigenTracks,
    pub jumps: Vec<PhaseJump>,
    pub floor: f64,
    pub area_s: f64,
    /// Largest `min |Omega_a| / floor` around any jump of the slice.
    pub jump_floor_ratio: f64,
}

/// Measurements checked by the acceptance suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub boundary_final_rho00: f64,
    pub boundary_final_rho11: f64,
    pub boundary_final_rho22: f64,
    pub boundary_max_abs_rho0s: f64,
    pub boundary_final_abs_rho0a: f64,

    pub fit_beta0_s: Option<f64>,
    pub fit_beta1_s: Option<f64>,
    pub fit_beta0_a: Option<f64>,
    pub fit_beta1_a: Option<f64>,
    pub fit_alpha0_a: Option<f64>,
    pub fit_alpha1_a: Option<f64>,
    pub fit_alpha2_a: Option<f64>,
    pub fit_saturating_converged: Option<bool>,

    pub transparency_xi: f64,
    /// Over stored depths beyond `transparency_xi`.
    pub max_excitation_beyond: Option<f64>,
    pub max_final_ps_beyond: Option<f64>,
    /// Over stored depths from `transparency_xi` on.
    pub final_ps_spread_beyond: Option<f64>,

    /// Stored depth closest to the configured reference depth.
    pub reference_xi: f64,
    pub area_s_ratio_at_reference: f64,
    pub final_pa_at_reference: f64,
    pub final_ps_at_reference: f64,

    pub total_jumps: usize,
    pub max_jump_size_error: Option<f64>,
    pub max_jump_floor_ratio: Option<f64>,
    pub jump_count_monotone: bool,

    pub lambda1_max_abs_xi0: f64,
    pub min_a_overlap_xi0: f64,
    pub gap_ratio_tau0_xi0: f64,
    pub margin_23_xi0: Option<f64>,

    pub integrator: IntegratorMeta,
    pub invariants_hold: bool,
    pub physical_units: PhysicalUnits,
}

pub struct Analysis {
    pub basis: SABasis,
    pub tau: Vec<f64>,
    pub slices: Vec<SliceAnalysis>,
    pub populations: Vec<PopulationSummary>,
    pub ledger: Vec<LedgerRecord>,
    pub fits: BTreeMap<String, FitResult>,
    /// Fits that could not be attempted, with the reason.
    pub fit_errors: BTreeMap<String, String>,
    pub boundary_trajectory: Vec<DensityMatrix>,
    pub summary: Summary,
}

fn window(w: [f64; 2]) -> (f64, f64) {
    (w[0], w[1])
}

fn analyse_slice(tau: &[f64], xi: f64, sa: SaFieldSlice, d_tau: f64) -> Result<SliceAnalysis> {
    let floor = amplitude_floor(&sa);
    let (ts, ta) = sa_phase_tracks(tau, &sa)?;
    let h = rotating_hamiltonian(&sa, &ts, &ta)?;
    let tracks = eigentracks(tau, &h)?;
    let amps: Vec<f64> = sa.omega_s.iter().map(|z| z.norm()).collect();
    let area_s = pulse_area(&amps, d_tau);
    let jump_floor_ratio = ta
        .jumps
        .iter()
        .map(|j| {
            let lo = j.index.saturating_sub(JUMP_NEIGHBOURHOOD + 1);
            let hi = (j.index + JUMP_NEIGHBOURHOOD).min(sa.len() - 1);
            sa.omega_a[lo..=hi].iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min) / floor
        })
        .fold(0.0, f64::max);
    Ok(SliceAnalysis {
        xi,
        sa,
        tracks,
        jumps: ta.jumps,
        floor,
        area_s,
        jump_floor_ratio,
    })
}

fn coherence_track(tau: &[f64], series: &[C64]) -> Result<chirpmatch_core::PhaseTrack> {
    let max = series.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(unwrap_phase(tau, series, (AMPLITUDE_FLOOR_FRACTION * max).max(f64::MIN_POSITIVE))?)
}

pub fn analyse(cfg: &RunConfig, result: &SimulationResult) -> Result<Analysis> {
    let sim = &result.config;
    let grid = &sim.grid;
    let tau = grid.tau_axis();
    let d_tau = grid.d_tau();
    let basis = SABasis::new(sim.theta1, sim.theta2)?;
    let an = &cfg.analysis;

    let slices = result
        .slices
        .iter()
        .map(|s| analyse_slice(&tau, s.xi, fields_to_sa(&s.fields, &basis), d_tau))
        .collect::<Result<Vec<_>>>()?;
    let populations = final_populations(result, &basis);
    let ledger = energy_ledger(result, &basis);

    // entrance trajectory, re-evolved when the run kept summaries only
    let entrance = &result.slices[0];
    let boundary_trajectory = match &entrance.trajectory {
        Some(t) => t.clone(),
        None => evolve_slice(&sim.initial_state.density_matrix(), &entrance.fields, &sim.atom, grid)?.states,
    };
    let sa_traj: Vec<DensityMatrix> = boundary_trajectory.iter().map(|r| rho_to_sa(r, &basis)).collect();
    let rho0s: Vec<C64> = sa_traj.iter().map(|r| r.get(0, 1)).collect();
    let rho0a: Vec<C64> = sa_traj.iter().map(|r| r.get(0, 2)).collect();

    let mut fits = BTreeMap::new();
    let mut fit_errors = BTreeMap::new();
    let mut record = |name: &str, r: Result<FitResult>| match r {
        Ok(f) => {
            fits.insert(name.to_string(), f);
        }
        Err(e) => {
            fit_errors.insert(name.to_string(), e.to_string());
        }
    };
    let undefined = || Err(crate::error::CliError::Invalid("coherence phase undefined".into()));
    let track_s = coherence_track(&tau, &rho0s);
    let track_a = coherence_track(&tau, &rho0a);
    match (&track_s, &track_a) {
        (Ok(ts), Ok(ta)) => {
            record("rho0s_quadratic", fit_quadratic_phase(ts, window(an.quadratic_s_window)).map_err(Into::into));
            record("rho0a_quadratic", fit_quadratic_phase(ta, window(an.quadratic_a_window)).map_err(Into::into));
            record("rho0a_saturating", fit_saturating_phase(ta, window(an.saturating_a_window)).map_err(Into::into));
        }
        _ => {
            record("rho0s_quadratic", undefined());
            record("rho0a_quadratic", undefined());
            record("rho0a_saturating", undefined());
        }
    }
    let reference = result.slice_near(an.reference_xi);
    let ref_index = result.slices.iter().position(|s| s.xi == reference.xi).unwrap_or(0);
    if ref_index > 0 {
        let sa = &slices[ref_index].sa;
        let r = sa_phase_tracks(&tau, sa)
            .map_err(Into::into)
            .and_then(|(_, ta)| fit_saturating_phase(&ta, window(an.saturating_a_window)).map_err(Into::into));
        record("omega_a_saturating_reference", r);
    }

    let param = |name: &str, k: usize| fits.get(name).map(|f: &FitResult| f.params[k]);
    let finals = boundary_trajectory.last().expect("non-empty trajectory").populations();

    let beyond: Vec<usize> = (0..populations.len())
        .filter(|&k| populations[k].xi > an.transparency_xi)
        .collect();
    let max_over = |f: &dyn Fn(&PopulationSummary) -> f64| {
        beyond.iter().map(|&k| f(&populations[k])).reduce(f64::max)
    };

    let jump_errors: Vec<f64> = slices
        .iter()
        .flat_map(|s| s.jumps.iter().map(|j| (j.size.abs() - std::f64::consts::PI).abs()))
        .collect();
    let counts: Vec<usize> = slices.iter().map(|s| s.jumps.len()).collect();
    let total_jumps = counts.iter().sum();

    let s0 = &slices[0];
    let i0 = grid.nearest_tau_index(0.0);
    let gap = (s0.tracks.values[i0][1] - s0.tracks.values[i0][2]).abs();

    let summary = Summary {
        boundary_final_rho00: finals[0],
        boundary_final_rho11: finals[1],
        boundary_final_rho22: finals[2],
        boundary_max_abs_rho0s: rho0s.iter().map(|z| z.norm()).fold(0.0, f64::max),
        boundary_final_abs_rho0a: rho0a.last().map_or(0.0, |z| z.norm()),

        fit_beta0_s: param("rho0s_quadratic", 0),
        fit_beta1_s: param("rho0s_quadratic", 1),
        fit_beta0_a: param("rho0a_quadratic", 0),
        fit_beta1_a: param("rho0a_quadratic", 1),
        fit_alpha0_a: param("rho0a_saturating", 0),
        fit_alpha1_a: param("rho0a_saturating", 1),
        fit_alpha2_a: param("rho0a_saturating", 2),
        fit_saturating_converged: fits.get("rho0a_saturating").map(|f| f.converged),

        transparency_xi: an.transparency_xi,
        max_excitation_beyond: max_over(&|p| p.max_excitation),
        max_final_ps_beyond: max_over(&|p| p.p_s()),
        final_ps_spread_beyond: final_ps_spread(&populations, an.transparency_xi, f64::INFINITY).ok(),

        reference_xi: reference.xi,
        area_s_ratio_at_reference: slices[ref_index].area_s / s0.area_s,
        final_pa_at_reference: populations[ref_index].p_a(),
        final_ps_at_reference: populations[ref_index].p_s(),

        total_jumps,
        max_jump_size_error: jump_errors.iter().copied().reduce(f64::max),
        max_jump_floor_ratio: (total_jumps > 0)
            .then(|| slices.iter().map(|s| s.jump_floor_ratio).fold(0.0, f64::max)),
        jump_count_monotone: counts.windows(2).all(|w| w[1] >= w[0]),

        lambda1_max_abs_xi0: s0.tracks.track(0).iter().map(|x| x.abs()).fold(0.0, f64::max),
        min_a_overlap_xi0: (0..s0.tracks.len())
            .map(|i| s0.tracks.vector(0, i)[2].abs())
            .fold(1.0, f64::min),
        gap_ratio_tau0_xi0: gap / (2.0 * sim.theta()),
        margin_23_xi0: adiabaticity_margin_pair(&s0.tracks, 1, 2).ok().map(|m| m.value),

        integrator: result.meta,
        invariants_hold: result.meta.invariants_hold(),
        physical_units: to_physical_units(sim, an.tau_sigma_s, an.lifetime_s)?,
    };

    Ok(Analysis {
        basis,
        tau,
        slices,
        populations,
        ledger,
        fits,
        fit_errors,
        boundary_trajectory,
        summary,
    })
}
