//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use chirpmatch_cli::analysis::Summary;
use chirpmatch_cli::run::{run_full, sweep_point, MANIFEST};
use chirpmatch_cli::{RunConfig, SweepAxis};
use chirpmatch_core::basis::{rho_from_sa, rho_to_sa, SABasis};
use chirpmatch_core::bloch::{evolve_slice, AtomParams, DensityMatrix};
use chirpmatch_core::diagnostics::energy_ledger;
use chirpmatch_core::fields::{FieldSlice, Grid};
use chirpmatch_core::propagation::{boundary_fields, propagate, SimulationConfig, StorageMode};
use chirpmatch_core::C64;

struct Gate {
    failed: usize,
    total: usize,
}

impl Gate {
    fn check(&mut self, id: &str, title: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} {id} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.6}"))
}

fn chirped(grid: &Grid, theta: f64, beta: f64) -> Vec<C64> {
    (0..grid.n_tau)
        .map(|i| {
            let t = grid.tau(i);
            theta * (-(t * t) * C64::new(0.5, beta)).exp()
        })
        .collect()
}

fn boundary_lossless() -> [f64; 3] {
    let mut cfg = SimulationConfig::default();
    cfg.atom.gamma = 0.0;
    let evo = evolve_slice(&DensityMatrix::level(2), &boundary_fields(&cfg), &cfg.atom, &cfg.grid).unwrap();
    evo.final_state().populations()
}

fn rk4_ratio() -> f64 {
    let atom = AtomParams::default();
    let run = |n: usize| {
        let g = Grid {
            tau_min: -4.0,
            tau_max: 4.0,
            n_tau: n,
            ..Grid::default()
        };
        let f = FieldSlice {
            omega1: chirped(&g, 15.0, 7.0),
            omega2: chirped(&g, 13.5, 7.0),
        };
        evolve_slice(&DensityMatrix::level(2), &f, &atom, &g).unwrap().states
    };
    let reference = run(3201);
    let err = |states: &[DensityMatrix], stride: usize| {
        states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.matrix() - reference[i * stride].matrix()).norm())
            .fold(0.0, f64::max)
    };
    err(&run(401), 8) / err(&run(801), 4)
}

/// Constant real field on `0 <-> 1`: `rho00 = sin^2(Omega tau)`.
fn rabi_error() -> f64 {
    let g = Grid {
        tau_min: 0.0,
        tau_max: 5.0,
        n_tau: 2001,
        ..Grid::default()
    };
    let omega = 2.0;
    let f = FieldSlice {
        omega1: vec![C64::from(omega); g.n_tau],
        omega2: vec![C64::from(0.0); g.n_tau],
    };
    let evo = evolve_slice(&DensityMatrix::level(1), &f, &AtomParams::resonant(0.0), &g).unwrap();
    evo.states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.get(0, 0).re - (omega * g.tau(i)).sin().powi(2)).abs())
        .fold(0.0, f64::max)
}

fn round_trip_error(states: &[DensityMatrix], basis: &SABasis) -> f64 {
    states
        .iter()
        .map(|r| (rho_from_sa(&rho_to_sa(r, basis), basis).matrix() - r.matrix()).norm())
        .fold(0.0, f64::max)
}

/// Largest deviation of the deposited-energy slope from `k alpha rho00`,
/// relative to the largest source value.
fn ledger_mismatch(n_xi: usize, k: f64) -> f64 {
    let mut cfg = SimulationConfig::default();
    cfg.atom.gamma = 0.0;
    cfg.grid.xi_max = 8.0;
    cfg.grid.n_xi = n_xi;
    cfg.grid.store_every = 1;
    cfg.storage = StorageMode::Lean;
    let r = propagate(&cfg).unwrap();
    let basis = SABasis::new(cfg.theta1, cfg.theta2).unwrap();
    let ledger = energy_ledger(&r, &basis);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for j in 0..ledger.len() - 1 {
        let slope = (ledger[j + 1].deposited - ledger[j].deposited) / (ledger[j + 1].xi - ledger[j].xi);
        let excited = 0.5 * (r.slices[j].final_state.get(0, 0).re + r.slices[j + 1].final_state.get(0, 0).re);
        worst = worst.max((slope - k * cfg.alpha * excited).abs());
        scale = scale.max(k * cfg.alpha * excited);
    }
    worst / scale
}

fn csv_identical(a: &Path, b: &Path) -> (bool, usize) {
    let mut n = 0;
    let mut same = true;
    for entry in fs::read_dir(a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == MANIFEST || !name.to_string_lossy().ends_with(".csv") {
            continue;
        }
        n += 1;
        same &= fs::read(a.join(&name)).unwrap() == fs::read(b.join(&name)).unwrap();
    }
    (same, n)
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0, total: 0 };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let out = run_full(&cfg, dir_a.path()).expect("default run");
    let s: &Summary = &out.analysis.summary;
    let on_disk: Summary =
        serde_json::from_str(&fs::read_to_string(dir_a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(&on_disk, s, "summary.json disagrees with the in-memory analysis");

    let lossless = boundary_lossless();
    gate.check(
        "C1",
        "boundary RAP populations",
        within(s.boundary_final_rho00, 0.4475, 0.03) && within(lossless[0], 0.4475, 0.005),
        format!(
            "final rho00 = {:.4} with Gamma=0.04 (0.4475 +- 0.03), {:.5} with Gamma=0 (0.4475 +- 0.005)",
            s.boundary_final_rho00, lossless[0]
        ),
    );

    gate.check(
        "C2",
        "boundary coherences",
        within(s.boundary_max_abs_rho0s, 0.224, 0.02) && within(s.boundary_final_abs_rho0a, 0.497, 0.02),
        format!(
            "max|rho0s| = {:.4} (0.224 +- 0.02), final |rho0a| = {:.4} (0.497 +- 0.02)",
            s.boundary_max_abs_rho0s, s.boundary_final_abs_rho0a
        ),
    );

    gate.check(
        "C3",
        "phase law fits",
        s.fit_beta1_s.is_some_and(|b| within(b, -7.0, 0.1)) && s.fit_alpha2_a.is_some_and(|a| within(a, 0.76, 0.15)),
        format!(
            "beta1_s = {} (-7.0 +- 0.1), alpha2_a = {} (0.76 +- 0.15)",
            opt(s.fit_beta1_s),
            opt(s.fit_alpha2_a)
        ),
    );

    gate.check(
        "C4",
        "transparency onset",
        s.max_excitation_beyond.is_some_and(|m| m < 0.05),
        format!(
            "max rho00 over stored xi > {} = {} (< 0.05)",
            s.transparency_xi,
            opt(s.max_excitation_beyond)
        ),
    );

    gate.check(
        "C5",
        "matched propagation",
        s.reference_xi == 40.0
            && within(s.area_s_ratio_at_reference, 1.0, 0.04)
            && s.max_final_ps_beyond.is_some_and(|p| p < 0.01)
            && s.final_pa_at_reference > 0.9,
        format!(
            "area_s(40)/area_s(0) = {:.5} (1 +- 0.04), max final P_s for xi > 6 = {} (< 0.01), P_a(40) = {:.4} (> 0.9)",
            s.area_s_ratio_at_reference,
            opt(s.max_final_ps_beyond),
            s.final_pa_at_reference
        ),
    );

    let jumps_ok = s.max_jump_size_error.is_none_or(|e| e <= 0.3)
        && s.max_jump_floor_ratio.is_none_or(|r| r <= 1.0)
        && s.jump_count_monotone;
    gate.check(
        "C6",
        "phase jumps",
        jumps_ok,
        format!(
            "{} jumps{}, max | |size| - pi | = {}, max |Omega_a|/floor at jumps = {}, count non-decreasing = {}",
            s.total_jumps,
            if s.total_jumps == 0 { " (criterion holds vacuously)" } else { "" },
            opt(s.max_jump_size_error),
            opt(s.max_jump_floor_ratio),
            s.jump_count_monotone
        ),
    );

    gate.check(
        "C7",
        "dressed-state structure",
        s.lambda1_max_abs_xi0 <= 1e-10 && s.min_a_overlap_xi0 > 1.0 - 1e-10 && within(s.gap_ratio_tau0_xi0, 1.0, 0.01),
        format!(
            "max|lambda1| = {:.3e} (<= 1e-10), min |<a~|v1>| = {:.12}, gap(0)/2theta = {:.6} (1 +- 0.01)",
            s.lambda1_max_abs_xi0, s.min_a_overlap_xi0, s.gap_ratio_tau0_xi0
        ),
    );

    let chirped_spread = sweep_point(&cfg, SweepAxis::Beta, 7.0).unwrap().ps_spread.unwrap();
    let flat_spread = sweep_point(&cfg, SweepAxis::Beta, 0.0).unwrap().ps_spread.unwrap();
    gate.check(
        "C8",
        "constant-frequency contrast",
        flat_spread >= 5.0 * chirped_spread,
        format!(
            "std P_s over xi in [6, 60]: beta=0 {flat_spread:.5}, beta=7 {chirped_spread:.5}, ratio {:.2} (>= 5)",
            flat_spread / chirped_spread
        ),
    );

    let invariants = out.result.meta;
    let ratio = rk4_ratio();
    let rabi = rabi_error();
    let round_trip = round_trip_error(&out.analysis.boundary_trajectory, &out.analysis.basis);
    let literal = ledger_mismatch(32, 2.0);
    let derived = (ledger_mismatch(16, 1.0), ledger_mismatch(32, 1.0));
    gate.check(
        "C9",
        "property suite",
        invariants.invariants_hold()
            && (12.0..=20.0).contains(&ratio)
            && rabi < 1e-5
            && round_trip < 1e-12
            && literal < 0.02,
        format!(
            "trace dev {:.1e}, positivity deficit {:.1e}; RK4 ratio {ratio:.2} [12, 20]; Rabi error {rabi:.1e} (< 1e-5); \
             round trip {round_trip:.1e} (< 1e-12); ledger vs 2 alpha rho00 {:.3} (< 0.02) \
             [vs alpha rho00: {:.2e} at n_xi=16, {:.2e} at n_xi=32]",
            invariants.max_trace_deviation, invariants.max_positivity_deficit, literal, derived.0, derived.1
        ),
    );

    run_full(&cfg, dir_b.path()).expect("second default run");
    let (same, n) = csv_identical(dir_a.path(), dir_b.path());
    gate.check(
        "C10",
        "determinism",
        same && n > 0,
        format!("{n} CSV files compared, byte-identical = {same}"),
    );

    println!("{} of {} criteria passed", gate.total - gate.failed, gate.total);
    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
