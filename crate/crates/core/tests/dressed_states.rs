use chirpmatch_core::adiabatic::{adiabaticity_margin_pair, eigentracks, rotating_hamiltonian, Diabatic};
use chirpmatch_core::basis::fields_to_sa;
use chirpmatch_core::diagnostics::sa_phase_tracks;
use chirpmatch_core::propagation::{boundary_fields, SimulationConfig};
use chirpmatch_core::{Matrix3, SABasis};

#[test]
fn entrance_structure() {
    let cfg = SimulationConfig::default();
    let tau = cfg.grid.tau_axis();
    let b = SABasis::new(cfg.theta1, cfg.theta2).unwrap();
    let sa = fields_to_sa(&boundary_fields(&cfg), &b);
    let (ts, ta) = sa_phase_tracks(&tau, &sa).unwrap();
    let h = rotating_hamiltonian(&sa, &ts, &ta).unwrap();
    let tracks = eigentracks(&tau, &h).unwrap();
    assert!(tracks.max_residual(&h) < 1e-10);
    assert!(tracks.max_orthonormality_error() < 1e-12);

    for i in 0..tracks.len() {
        assert!(tracks.values[i][0].abs() <= 1e-10);
        assert!(tracks.vector(0, i)[2].abs() > 1.0 - 1e-10);
    }
    let i0 = cfg.grid.nearest_tau_index(0.0);
    let gap = tracks.values[i0][1] - tracks.values[i0][2];
    assert!((gap.abs() / (2.0 * cfg.theta()) - 1.0).abs() < 0.01);

    // lambda2 carries |0> into |s~>
    assert_eq!(tracks.dominant(1, 0), Diabatic::Excited);
    assert_eq!(tracks.dominant(1, tracks.len() - 1), Diabatic::Symmetric);
    assert!(adiabaticity_margin_pair(&tracks, 1, 2).unwrap().value < 0.2);
}

#[test]
fn landau_zener_margin() {
    // |0> - |s~> crossing with constant coupling g and diagonal sweep 2 beta tau
    let (g, beta) = (3.0, 7.0);
    let tau: Vec<f64> = (0..4001).map(|i| -4.0 + i as f64 * 0.002).collect();
    let h: Vec<Matrix3<f64>> = tau
        .iter()
        .map(|&t| Matrix3::new(0.0, -g, 0.0, -g, -2.0 * beta * t, 0.0, 0.0, 0.0, 50.0))
        .collect();
    let tracks = eigentracks(&tau, &h).unwrap();
    let m = adiabaticity_margin_pair(&tracks, 1, 2).unwrap();
    let oracle = beta / (4.0 * g * g);
    assert!((m.value / oracle - 1.0).abs() < 0.05, "{} vs {oracle}", m.value);
    assert!(m.tau.abs() < 0.05);
}
