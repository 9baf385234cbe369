//! Symmetric-antisymmetric representation and phase bookkeeping.
//!
//! With real entrance amplitudes `theta1`, `theta2` the map
//! `|s> = (theta1 |1> + theta2 |2>) / theta`, `|a> = (theta2 |1> - theta1 |2>) / theta`
//! is a real reflection, so the same matrix converts in both directions.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::DensityMatrix;
use crate::error::{Error, Result};
use crate::fields::{FieldSlice, SaFieldSlice};

/// Half-width of the accepted window around `pi` for a recorded jump.
pub const JUMP_TOLERANCE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SABasis {
    pub theta1: f64,
    pub theta2: f64,
    pub theta: f64,
}

impl SABasis {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        let theta = theta1.hypot(theta2);
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidArgument(
                "basis amplitudes must not both vanish".into(),
            ));
        }
        Ok(Self {
            theta1,
            theta2,
            theta,
        })
    }

    fn c1(&self) -> f64 {
        self.theta1 / self.theta
    }

    fn c2(&self) -> f64 {
        self.theta2 / self.theta
    }

    /// Rows are `<0|`, `<s|`, `<a|` in the bare basis.
    pub fn matrix(&self) -> Matrix3<f64> {
        let (c1, c2) = (self.c1(), self.c2());
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c1, c2, 0.0, c2, -c1)
    }

    pub fn s_state(&self) -> [C64; 3] {
        [0.0.into(), self.c1().into(), self.c2().into()]
    }

    pub fn a_state(&self) -> [C64; 3] {
        [0.0.into(), self.c2().into(), (-self.c1()).into()]
    }

    fn mix(&self, x: C64, y: C64) -> (C64, C64) {
        let (c1, c2) = (self.c1(), self.c2());
        (x * c1 + y * c2, x * c2 - y * c1)
    }
}

/// `Omega_s = (theta1 Omega1 + theta2 Omega2) / theta`, `Omega_a = (theta2 Omega1 - theta1 Omega2) / theta`.
pub fn fields_to_sa(fields: &FieldSlice, basis: &SABasis) -> SaFieldSlice {
    let (omega_s, omega_a) = fields
        .omega1
        .iter()
        .zip(&fields.omega2)
        .map(|(&o1, &o2)| basis.mix(o1, o2))
        .unzip();
    SaFieldSlice { omega_s, omega_a }
}

/// Inverse of [`fields_to_sa`].
pub fn fields_from_sa(sa: &SaFieldSlice, basis: &SABasis) -> FieldSlice {
    let (omega1, omega2) = sa
        .omega_s
        .iter()
        .zip(&sa.omega_a)
        .map(|(&s, &a)| basis.mix(s, a))
        .unzip();
    FieldSlice { omega1, omega2 }
}

/// `rho` expressed in `{|0>, |s>, |a>}`.
pub fn rho_to_sa(rho: &DensityMatrix, basis: &SABasis) -> DensityMatrix {
    let u = basis.matrix().map(C64::from);
    DensityMatrix::from_matrix(u * rho.matrix() * u.transpose())
}

/// Inverse of [`rho_to_sa`] (the map is an involution).
pub fn rho_from_sa(rho_sa: &DensityMatrix, basis: &SABasis) -> DensityMatrix {
    rho_to_sa(rho_sa, basis)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseJump {
    pub index: usize,
    pub tau: f64,
    /// Excess phase step across the amplitude minimum, close to `+-pi`.
    pub size: f64,
}

/// Continuous phase of a complex series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrack {
    pub tau: Vec<f64>,
    pub phase: Vec<f64>,
    /// Samples whose modulus lies below the amplitude floor.
    pub below_floor: Vec<bool>,
    pub jumps: Vec<PhaseJump>,
}

impl PhaseTrack {
    /// A track with zero phase everywhere, every sample flagged.
    pub fn flat(tau: &[f64]) -> Self {
        Self {
            tau: tau.to_vec(),
            phase: vec![0.0; tau.len()],
            below_floor: vec![true; tau.len()],
            jumps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    /// Phase with every recorded jump subtracted from the samples after it.
    pub fn jump_corrected(&self) -> Vec<f64> {
        let mut out = self.phase.clone();
        for jump in &self.jumps {
            for p in &mut out[jump.index..] {
                *p -= jump.size;
            }
        }
        out
    }

    /// Whether the track carries any sample above the floor.
    pub fn has_valid_samples(&self) -> bool {
        self.below_floor.iter().any(|b| !b)
    }
}

/// Number of samples on either side of an amplitude minimum used to
/// measure the phase step across it.
const JUMP_HALF_WIDTH: usize = 2;

/// Unwraps `arg(series)` so that successive differences lie in `(-pi, pi]`.
///
/// The global `2 pi` branch is fixed by the first sample whose modulus is at
/// least `amplitude_floor`, which keeps its principal value. Sign flips of
/// the underlying amplitude show up as steps of about `pi` located at a
/// local amplitude minimum; those are recorded in [`PhaseTrack::jumps`] when
/// the minimum lies below `amplitude_floor` or below half of the
/// surrounding amplitude.
pub fn unwrap_phase(tau: &[f64], series: &[C64], amplitude_floor: f64) -> Result<PhaseTrack> {
    if !(amplitude_floor > 0.0 && amplitude_floor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "amplitude floor must be positive, got {amplitude_floor}"
        )));
    }
    if tau.len() != series.len() {
        return Err(Error::LengthMismatch {
            what: "series",
            expected: tau.len(),
            got: series.len(),
        });
    }
    if series.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroSeries);
    }

    let amp: Vec<f64> = series.iter().map(|z| z.norm()).collect();
    let mut phase = Vec::with_capacity(series.len());
    let mut offset = 0.0;
    let mut prev = series[0].arg();
    phase.push(prev);
    for z in &series[1..] {
        let raw = z.arg();
        let mut d = raw - prev;
        if d > PI {
            offset -= TAU;
            d -= TAU;
        } else if d <= -PI {
            offset += TAU;
            d += TAU;
        }
        debug_assert!(d > -PI && d <= PI);
        prev = raw;
        phase.push(raw + offset);
    }

    let below_floor: Vec<bool> = amp.iter().map(|&a| a < amplitude_floor).collect();
    if let Some(anchor) = below_floor.iter().position(|b| !b) {
        let shift = phase[anchor] - series[anchor].arg();
        let k = (shift / TAU).round();
        if k != 0.0 {
            for p in &mut phase {
                *p -= k * TAU;
            }
        }
    }

    let jumps = detect_jumps(tau, &phase, &amp, amplitude_floor);
    Ok(PhaseTrack {
        tau: tau.to_vec(),
        phase,
        below_floor,
        jumps,
    })
}

fn detect_jumps(tau: &[f64], phase: &[f64], amp: &[f64], floor: f64) -> Vec<PhaseJump> {
    let w = JUMP_HALF_WIDTH;
    let n = phase.len();
    let mut jumps = Vec::new();
    if n < 4 * w + 1 {
        return jumps;
    }
    let mut i = 2 * w;
    while i + 2 * w < n {
        let is_min = amp[i] <= amp[i - 1] && amp[i] <= amp[i + 1];
        let surround = amp[i - w].max(amp[i + w]);
        let deep = amp[i] < floor || amp[i] < 0.5 * surround;
        if is_min && deep && surround >= floor {
            let left_slope = phase[i - w] - phase[i - 2 * w];
            let right_slope = phase[i + 2 * w] - phase[i + w];
            let expected = left_slope + right_slope;
            let excess = (phase[i + w] - phase[i - w]) - expected;
            if (excess.abs() - PI).abs() <= JUMP_TOLERANCE {
                // place the jump at the steepest single step inside the window
                let per_step = expected / (2 * w) as f64;
                let k = (i - w..i + w)
                    .max_by(|&a, &b| {
                        let da = (phase[a + 1] - phase[a] - per_step).abs();
                        let db = (phase[b + 1] - phase[b] - per_step).abs();
                        da.total_cmp(&db)
                    })
                    .unwrap_or(i);
                jumps.push(PhaseJump {
                    index: k + 1,
                    tau: tau[i],
                    size: excess,
                });
                i += 2 * w;
                continue;
            }
        }
        i += 1;
    }
    jumps
}

/// `d phi / d tau` of the jump-corrected phase: centred differences inside,
/// one-sided at the ends.
pub fn instantaneous_detuning(track: &PhaseTrack) -> Result<Vec<f64>> {
    let n = track.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    let phase = track.jump_corrected();
    let t = &track.tau;
    let mut out = Vec::with_capacity(n);
    out.push((phase[1] - phase[0]) / (t[1] - t[0]));
    for i in 1..n - 1 {
        out.push((phase[i + 1] - phase[i - 1]) / (t[i + 1] - t[i - 1]));
    }
    out.push((phase[n - 1] - phase[n - 2]) / (t[n - 1] - t[n - 2]));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: f64 = 15.0;
    const T2: f64 = 13.5;

    fn basis() -> SABasis {
        SABasis::new(T1, T2).unwrap()
    }

    fn axis(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn basis_matrix_is_orthogonal() {
        let u = basis().matrix();
        assert!((u * u.transpose() - Matrix3::identity()).abs().max() < 1e-15);
        assert!((u.determinant().abs() - 1.0).abs() < 1e-14);
        assert!(SABasis::new(0.0, 0.0).is_err());
    }

    #[test]
    fn entrance_fields_are_purely_symmetric() {
        let tau = axis(-3.0, 3.0, 61);
        let env: Vec<C64> = tau
            .iter()
            .map(|t| (-(t * t) * C64::new(0.5, 7.0)).exp())
            .collect();
        let f = FieldSlice {
            omega1: env.iter().map(|e| e * T1).collect(),
            omega2: env.iter().map(|e| e * T2).collect(),
        };
        let sa = fields_to_sa(&f, &basis());
        let theta = T1.hypot(T2);
        for (i, e) in env.iter().enumerate() {
            assert!((sa.omega_s[i] - e * theta).norm() < 1e-12);
            assert!(sa.omega_a[i].norm() < 1e-12);
        }
    }

    #[test]
    fn antisymmetric_input() {
        let b = SABasis::new(2.0, 2.0).unwrap();
        let g = C64::new(0.3, -0.4);
        let f = FieldSlice {
            omega1: vec![g],
            omega2: vec![-g],
        };
        let sa = fields_to_sa(&f, &b);
        assert!(sa.omega_s[0].norm() < 1e-15);
        assert!((sa.omega_a[0] - g * 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn inverse_map_values() {
        let b = basis();
        let theta = b.theta;
        let sa = SaFieldSlice {
            omega_s: vec![C64::from(theta), C64::from(0.0)],
            omega_a: vec![C64::from(0.0), C64::from(theta)],
        };
        let f = fields_from_sa(&sa, &b);
        assert!((f.omega1[0] - C64::from(15.0)).norm() < 1e-12);
        assert!((f.omega2[0] - C64::from(13.5)).norm() < 1e-12);
        assert!((f.omega1[1] - C64::from(13.5)).norm() < 1e-12);
        assert!((f.omega2[1] - C64::from(-15.0)).norm() < 1e-12);
    }

    #[test]
    fn state_two_in_sa_basis() {
        let r = rho_to_sa(&DensityMatrix::level(2), &basis());
        let th2 = T1 * T1 + T2 * T2;
        assert!((r.get(1, 1).re - T2 * T2 / th2).abs() < 1e-12);
        assert!((r.get(2, 2).re - T1 * T1 / th2).abs() < 1e-12);
        assert!((r.get(1, 2).re + T1 * T2 / th2).abs() < 1e-12);
        assert!((r.get(1, 1).re - 0.4475).abs() < 1e-4);
        assert!((r.get(1, 2).re + 0.4972).abs() < 1e-4);
    }

    #[test]
    fn excited_state_is_shared() {
        let r = rho_to_sa(&DensityMatrix::level(0), &basis());
        assert!((r.matrix() - DensityMatrix::level(0).matrix()).norm() < 1e-15);
    }

    #[test]
    fn chirp_unwraps_without_jumps() {
        let tau = axis(-3.0, 3.0, 1201);
        let z: Vec<C64> = tau.iter().map(|t| C64::from_polar(1.0, -7.0 * t * t)).collect();
        let track = unwrap_phase(&tau, &z, 1e-4).unwrap();
        assert!(track.jumps.is_empty());
        // anchor at tau = -3 keeps the principal value, so the offset is a
        // single 2 pi multiple
        let k = (track.phase[0] - (-63.0)) / TAU;
        assert!((k - k.round()).abs() < 1e-9);
        for (p, t) in track.phase.iter().zip(&tau) {
            assert!((p - (-7.0 * t * t) - k.round() * TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_series() {
        let tau = axis(0.0, 1.0, 11);
        let z = vec![C64::from_polar(2.0, 0.4); 11];
        let track = unwrap_phase(&tau, &z, 1e-4).unwrap();
        assert!(track.phase.iter().all(|p| (p - 0.4).abs() < 1e-15));
        assert!(track.jumps.is_empty());
        let d = instantaneous_detuning(&track).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn sign_changes_become_pi_jumps() {
        let tau = axis(-4.0, 4.0, 1601);
        let g: Vec<C64> = tau
            .iter()
            .map(|t| C64::from((-t * t / 2.0).exp() * (5.0 * t).sin()))
            .collect();
        let track = unwrap_phase(&tau, &g, 1e-4).unwrap();
        // zeros of sin(5 tau) in (-4, 4) where the envelope is still resolvable
        let expected: Vec<f64> = (-6..=6)
            .map(|k| k as f64 * PI / 5.0)
            .filter(|t| (-t * t / 2.0f64).exp() > 1e-3)
            .collect();
        assert_eq!(track.jumps.len(), expected.len(), "{:?}", track.jumps);
        for (j, t) in track.jumps.iter().zip(&expected) {
            assert!((j.tau - t).abs() < 0.01, "{} vs {}", j.tau, t);
            assert!((j.size.abs() - PI).abs() < 1e-6);
        }
        // between jumps the unwrapped steps stay below pi
        for w in track.phase.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI + 1e-12);
        }
    }

    #[test]
    fn unwrap_errors() {
        let tau = axis(0.0, 1.0, 5);
        assert_eq!(
            unwrap_phase(&tau, &[C64::from(0.0); 5], 1e-4).unwrap_err(),
            Error::ZeroSeries
        );
        assert!(unwrap_phase(&tau, &[C64::from(1.0); 5], 0.0).is_err());
        assert!(unwrap_phase(&tau, &[C64::from(1.0); 4], 1e-4).is_err());
    }

    #[test]
    fn detuning_of_chirp() {
        let tau = axis(-3.0, 3.0, 601);
        let z: Vec<C64> = tau.iter().map(|t| C64::from_polar(1.0, -7.0 * t * t)).collect();
        let track = unwrap_phase(&tau, &z, 1e-4).unwrap();
        let d = instantaneous_detuning(&track).unwrap();
        for i in 1..tau.len() - 1 {
            assert!((d[i] + 14.0 * tau[i]).abs() < 1e-6);
        }
        assert!(instantaneous_detuning(&PhaseTrack::flat(&[0.0, 1.0])).is_err());
    }
}
