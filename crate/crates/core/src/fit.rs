//! Least-squares fits of unwrapped phase tracks.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::basis::PhaseTrack;
use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 10;
pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `b0 + b1 tau^2`
    Quadratic,
    /// `a0 + a1 exp(-pi exp(a2 tau) / 2)`
    SaturatingDoubleExponential,
}

impl FitModel {
    pub fn evaluate(self, params: &[f64], tau: f64) -> f64 {
        match self {
            FitModel::Quadratic => params[0] + params[1] * tau * tau,
            FitModel::SaturatingDoubleExponential => params[0] + params[1] * saturating(params[2], tau),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub rms: f64,
    pub n_samples: usize,
    pub window: (f64, f64),
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn evaluate(&self, tau: f64) -> f64 {
        self.model.evaluate(&self.params, tau)
    }
}

fn saturating(a2: f64, tau: f64) -> f64 {
    (-0.5 * PI * (a2 * tau).exp()).exp()
}

/// Valid samples of the jump-corrected phase inside `window`.
fn window_samples(track: &PhaseTrack, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidArgument(format!("empty fit window [{lo}, {hi}]")));
    }
    let phase = track.jump_corrected();
    let (tau, phi): (Vec<f64>, Vec<f64>) = track
        .tau
        .iter()
        .zip(&phase)
        .zip(&track.below_floor)
        .filter(|((t, _), below)| **t >= lo && **t <= hi && !**below)
        .map(|((t, p), _)| (*t, *p))
        .unzip();
    if tau.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: tau.len(),
        });
    }
    Ok((tau, phi))
}

fn rms(model: FitModel, params: &[f64], tau: &[f64], phi: &[f64]) -> f64 {
    let sse: f64 = tau
        .iter()
        .zip(phi)
        .map(|(t, p)| (p - model.evaluate(params, *t)).powi(2))
        .sum();
    (sse / tau.len() as f64).sqrt()
}

/// Fits `b0 + b1 tau^2` to the phase inside `window`.
///
/// Recorded pi-jumps are removed before fitting, which is the same as
/// letting `b0` shift by the jump across each one.
pub fn fit_quadratic_phase(track: &PhaseTrack, window: (f64, f64)) -> Result<FitResult> {
    let (tau, phi) = window_samples(track, window)?;
    let (a, b) = linear_fit(tau.iter().map(|t| t * t), &phi)?;
    let params = vec![a, b];
    Ok(FitResult {
        model: FitModel::Quadratic,
        rms: rms(FitModel::Quadratic, &params, &tau, &phi),
        params,
        n_samples: tau.len(),
        window,
        converged: true,
        iterations: 0,
    })
}

/// Least squares for `y = a + b x`.
fn linear_fit(x: impl Iterator<Item = f64>, y: &[f64]) -> Result<(f64, f64)> {
    let mut ata = Matrix2::zeros();
    let mut aty = Vector2::zeros();
    for (x, y) in x.zip(y) {
        let row = Vector2::new(1.0, x);
        ata += row * row.transpose();
        aty += row * *y;
    }
    let sol = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::InvalidArgument("degenerate fit design".into()))?;
    Ok((sol[0], sol[1]))
}

/// Fits `a0 + a1 exp(-pi exp(a2 tau) / 2)` to the phase inside `window`.
///
/// A grid search over `a2` in `[0.1, 3]` (with the linear parameters solved
/// exactly) seeds a damped Gauss-Newton iteration. Failure to converge is
/// reported through [`FitResult::converged`].
pub fn fit_saturating_phase(track: &PhaseTrack, window: (f64, f64)) -> Result<FitResult> {
    let (tau, phi) = window_samples(track, window)?;
    let model = FitModel::SaturatingDoubleExponential;
    let sse = |p: &Vector3<f64>| -> f64 {
        tau.iter()
            .zip(&phi)
            .map(|(t, y)| (y - model.evaluate(p.as_slice(), *t)).powi(2))
            .sum()
    };

    let mut best: Option<(Vector3<f64>, f64)> = None;
    for k in 0..=290 {
        let a2 = 0.1 + 0.01 * k as f64;
        let Ok((a0, a1)) = linear_fit(tau.iter().map(|t| saturating(a2, *t)), &phi) else {
            continue;
        };
        let p = Vector3::new(a0, a1, a2);
        let s = sse(&p);
        if s.is_finite() && best.is_none_or(|(_, b)| s < b) {
            best = Some((p, s));
        }
    }
    let (mut p, mut cost) = best.ok_or_else(|| Error::InvalidArgument("no usable seed".into()))?;

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (t, y) in tau.iter().zip(&phi) {
            let e = saturating(p[2], *t);
            let g = Vector3::new(1.0, e, -0.5 * PI * p[1] * e * (p[2] * t).exp() * t);
            jtj += g * g.transpose();
            jtr += g * (y - p[0] - p[1] * e);
        }
        let mut stepped = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for d in 0..3 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            let c = sse(&trial);
            if c.is_finite() && c <= cost {
                let small = (0..3).all(|i| delta[i].abs() <= RELATIVE_TOLERANCE * (p[i].abs() + RELATIVE_TOLERANCE));
                p = trial;
                cost = c;
                lambda = (lambda * 0.1).max(1e-12);
                stepped = true;
                converged = small;
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !stepped {
            // no downhill step at any damping: at a minimum to machine precision
            converged = true;
            break;
        }
    }

    let params = vec![p[0], p[1], p[2]];
    Ok(FitResult {
        model,
        rms: rms(model, &params, &tau, &phi),
        params,
        n_samples: tau.len(),
        window,
        converged,
        iterations,
    })
}

/// Distance between two phase constants modulo `2 pi`, in `[0, pi]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
