//! Sampling grid and field envelopes.
//!
//! All times are retarded times in units of the pulse duration, all
//! distances are in absorption lengths, and Rabi frequencies are complex
//! numbers in units of inverse pulse duration.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform retarded-time axis plus the spatial marching schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub xi_max: f64,
    /// Number of spatial steps between `0` and `xi_max`.
    pub n_xi: usize,
    /// Store every `store_every`-th spatial slice (the last one is always kept).
    pub store_every: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            tau_min: -6.0,
            tau_max: 8.0,
            n_tau: 2801,
            xi_max: 60.0,
            n_xi: 240,
            store_every: 4,
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.n_tau < 2 {
            return Err(Error::GridTooSmall(self.n_tau));
        }
        if !(self.tau_min.is_finite() && self.tau_max.is_finite()) || self.tau_min >= self.tau_max
        {
            return Err(Error::InvalidGrid(format!(
                "tau_min ({}) must be below tau_max ({})",
                self.tau_min, self.tau_max
            )));
        }
        if !self.xi_max.is_finite() || self.xi_max < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "xi_max must be non-negative, got {}",
                self.xi_max
            )));
        }
        if self.n_xi == 0 {
            return Err(Error::InvalidGrid("n_xi must be at least 1".into()));
        }
        if self.store_every == 0 {
            return Err(Error::InvalidGrid("store_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn d_tau(&self) -> f64 {
        (self.tau_max - self.tau_min) / (self.n_tau - 1) as f64
    }

    pub fn d_xi(&self) -> f64 {
        self.xi_max / self.n_xi as f64
    }

    pub fn tau(&self, i: usize) -> f64 {
        // Interpolating from both ends keeps tau_max exact.
        let t = i as f64 / (self.n_tau - 1) as f64;
        self.tau_min * (1.0 - t) + self.tau_max * t
    }

    pub fn tau_axis(&self) -> Vec<f64> {
        (0..self.n_tau).map(|i| self.tau(i)).collect()
    }

    /// Index of the node closest to `tau`.
    pub fn nearest_tau_index(&self, tau: f64) -> usize {
        let x = ((tau - self.tau_min) / self.d_tau()).round();
        x.clamp(0.0, (self.n_tau - 1) as f64) as usize
    }

    pub fn xi(&self, step: usize) -> f64 {
        if step == self.n_xi {
            self.xi_max
        } else {
            step as f64 * self.d_xi()
        }
    }
}

/// Rabi frequencies of the two pulses sampled on the tau grid at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSlice {
    pub omega1: Vec<C64>,
    pub omega2: Vec<C64>,
}

impl FieldSlice {
    pub fn new(omega1: Vec<C64>, omega2: Vec<C64>) -> Result<Self> {
        if omega1.len() != omega2.len() {
            return Err(Error::LengthMismatch {
                what: "omega2",
                expected: omega1.len(),
                got: omega2.len(),
            });
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            omega1: vec![C64::new(0.0, 0.0); n],
            omega2: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.omega1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega1.is_empty()
    }

    /// First index holding a non-finite sample in either pulse.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.omega1
            .iter()
            .zip(&self.omega2)
            .position(|(a, b)| !(a.is_finite() && b.is_finite()))
    }

    pub fn check_against(&self, grid: &Grid) -> Result<()> {
        if self.omega1.len() != grid.n_tau || self.omega2.len() != grid.n_tau {
            return Err(Error::LengthMismatch {
                what: "field slice",
                expected: grid.n_tau,
                got: self.omega1.len().min(self.omega2.len()),
            });
        }
        match self.first_non_finite() {
            Some(index) => Err(Error::NonFiniteField { index }),
            None => Ok(()),
        }
    }
}

/// Effective couplings in the symmetric-antisymmetric representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaFieldSlice {
    pub omega_s: Vec<C64>,
    pub omega_a: Vec<C64>,
}

impl SaFieldSlice {
    pub fn len(&self) -> usize {
        self.omega_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_s.is_empty()
    }

    /// Largest modulus over both couplings.
    pub fn max_amplitude(&self) -> f64 {
        self.omega_s
            .iter()
            .chain(&self.omega_a)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Value of sampled data half way between nodes `i` and `i + 1`.
///
/// Uses the 4-point Lagrange interpolant (one-sided at the ends) so the
/// error is fourth order in the node spacing; two or three samples fall
/// back to linear interpolation.
pub(crate) fn midpoint(samples: &[C64], i: usize) -> C64 {
    let n = samples.len();
    debug_assert!(i + 1 < n);
    if n < 4 {
        return (samples[i] + samples[i + 1]) * 0.5;
    }
    if i == 0 {
        samples[0] * 0.3125 + samples[1] * 0.9375 - samples[2] * 0.3125 + samples[3] * 0.0625
    } else if i + 2 == n {
        samples[n - 1] * 0.3125 + samples[n - 2] * 0.9375 - samples[n - 3] * 0.3125
            + samples[n - 4] * 0.0625
    } else {
        (samples[i] + samples[i + 1]) * 0.5625 - (samples[i - 1] + samples[i + 2]) * 0.0625
    }
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: impl IntoIterator<Item = f64>, dx: f64) -> f64 {
    let mut iter = values.into_iter();
    let Some(first) = iter.next() else {
        return 0.0;
    };
    let mut sum = 0.5 * first;
    let mut last = first;
    let mut count = 1usize;
    for v in iter {
        sum += v;
        last = v;
        count += 1;
    }
    if count == 1 {
        return 0.0;
    }
    (sum - 0.5 * last) * dx
}
