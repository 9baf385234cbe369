//! Lambda-atom dynamics: RWA Hamiltonian, dissipative master equation and a
//! fixed-step RK4 integrator over retarded time.
//!
//! Level `0` is the excited state, `1` and `2` are the metastable ground
//! states. Hamiltonians are returned as `H / hbar` in units of `1/tau_sigma`.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{midpoint, FieldSlice, Grid};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance on `|tr rho - 1|` after each step.
pub const TRACE_TOLERANCE: f64 = 1e-9;
/// Smallest eigenvalue still accepted as non-negative.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

/// Relaxation rate and one-photon detunings of the atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Longitudinal relaxation rate from `|0>` into each ground state.
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Default for AtomParams {
    /// Lifetime `T = 50 tau_sigma` with `T = 2 / Gamma`, Raman resonant.
    fn default() -> Self {
        Self {
            gamma: 0.04,
            delta1: 0.0,
            delta2: 0.0,
        }
    }
}

impl AtomParams {
    pub fn resonant(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.delta1.is_finite() && self.delta2.is_finite()) {
            return Err(Error::InvalidConfig("detunings must be finite".into()));
        }
        Ok(())
    }
}

/// Averaged single-atom state: a 3x3 Hermitian, unit-trace matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix3<C64>);

impl DensityMatrix {
    /// Wraps a matrix after forcing exact Hermiticity.
    pub fn from_matrix(m: Matrix3<C64>) -> Self {
        Self(hermitize(&m))
    }

    /// Like [`DensityMatrix::from_matrix`] but rejects matrices that are not
    /// a physical state to within `tol`.
    pub fn try_from_matrix(m: Matrix3<C64>, tol: f64) -> Result<Self> {
        let herm_err = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > tol {
            return Err(Error::InvalidArgument(format!(
                "density matrix is not Hermitian (deviation {herm_err:e})"
            )));
        }
        let rho = Self::from_matrix(m);
        if (rho.trace() - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace is {}, expected 1",
                rho.trace()
            )));
        }
        if rho.positivity_deficit() > tol {
            return Err(Error::InvalidArgument(
                "density matrix has a negative eigenvalue".into(),
            ));
        }
        Ok(rho)
    }

    /// Projector onto bare level `k`.
    pub fn level(k: usize) -> Self {
        assert!(k < 3, "level index out of range");
        let mut m = Matrix3::zeros();
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// Projector onto the (normalised) pure state with amplitudes `psi`.
    pub fn pure(psi: [C64; 3]) -> Self {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<C64> = psi.iter().map(|c| c / norm).collect();
        Self(Matrix3::from_fn(|k, l| v[k] * v[l].conj()))
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    /// Element `<k| rho |l>`.
    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.0[(k, l)]
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let ev = self.0.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(f64::total_cmp);
        out
    }

    /// `max(0, -lambda_min)`.
    pub fn positivity_deficit(&self) -> f64 {
        (-self.eigenvalues()[0]).max(0.0)
    }

    /// `<psi| rho |psi>` for a normalised `psi`.
    pub fn expectation(&self, psi: &[C64; 3]) -> f64 {
        let mut acc = ZERO;
        for k in 0..3 {
            for l in 0..3 {
                acc += psi[k].conj() * self.0[(k, l)] * psi[l];
            }
        }
        acc.re
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let re: [[f64; 3]; 3] = std::array::from_fn(|k| std::array::from_fn(|l| self.0[(k, l)].re));
        let im: [[f64; 3]; 3] = std::array::from_fn(|k| std::array::from_fn(|l| self.0[(k, l)].im));
        RawMatrix { re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMatrix::deserialize(d)?;
        let m = Matrix3::from_fn(|k, l| C64::new(raw.re[k][l], raw.im[k][l]));
        DensityMatrix::try_from_matrix(m, 1e-9).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    re: [[f64; 3]; 3],
    im: [[f64; 3]; 3],
}

fn hermitize(m: &Matrix3<C64>) -> Matrix3<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `H / hbar = -[ -delta1 |1><1| - delta2 |2><2| + (Omega1 |0><1| + Omega2 |0><2| + h.c.) ]`.
pub fn hamiltonian_rwa(omega1: C64, omega2: C64, atom: &AtomParams) -> Matrix3<C64> {
    let mut h = Matrix3::zeros();
    h[(1, 1)] = C64::new(atom.delta1, 0.0);
    h[(2, 2)] = C64::new(atom.delta2, 0.0);
    h[(0, 1)] = -omega1;
    h[(1, 0)] = -omega1.conj();
    h[(0, 2)] = -omega2;
    h[(2, 0)] = -omega2.conj();
    h
}

/// Right-hand side of the master equation,
/// `-i [H, rho] - 2 Gamma rho00 |0><0| + sum_k [Gamma rho00 |k><k| - Gamma (rho0k |0><k| + h.c.)]`.
pub fn master_rhs(rho: &Matrix3<C64>, h: &Matrix3<C64>, atom: &AtomParams) -> Matrix3<C64> {
    let mut d = (h * rho - rho * h) * (-I);
    let g = atom.gamma;
    if g != 0.0 {
        let p0 = rho[(0, 0)].re;
        d[(0, 0)] -= C64::new(2.0 * g * p0, 0.0);
        for k in 1..3 {
            d[(k, k)] += C64::new(g * p0, 0.0);
            d[(0, k)] -= rho[(0, k)] * g;
            d[(k, 0)] -= rho[(k, 0)] * g;
        }
    }
    d
}

/// Atomic trajectory at one depth together with invariant monitoring.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceEvolution {
    pub states: Vec<DensityMatrix>,
    pub steps: usize,
    pub max_trace_deviation: f64,
    pub max_positivity_deficit: f64,
}

impl SliceEvolution {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("evolution has at least one node")
    }

    pub fn max_excitation(&self) -> f64 {
        self.states
            .iter()
            .map(|r| r.get(0, 0).re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `<0| rho |k>` along the trajectory, the polarisation source for pulse `k`.
    pub fn coherence(&self, k: usize) -> Vec<C64> {
        self.states.iter().map(|r| r.get(0, k)).collect()
    }
}

/// Integrates the master equation over the tau grid with classical RK4.
///
/// Fields are known on the grid nodes only; their half-step values come
/// from [`midpoint`] interpolation.
pub fn evolve_slice(
    rho0: &DensityMatrix,
    fields: &FieldSlice,
    atom: &AtomParams,
    grid: &Grid,
) -> Result<SliceEvolution> {
    if grid.n_tau < 2 {
        return Err(Error::GridTooSmall(grid.n_tau));
    }
    fields.check_against(grid)?;

    let dt = grid.d_tau();
    let n = grid.n_tau;
    let mut states = Vec::with_capacity(n);
    let mut rho = *rho0.matrix();
    let mut max_trace = (rho.trace().re - 1.0).abs();
    let mut max_deficit = rho0.positivity_deficit();
    states.push(*rho0);

    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut h_start = hamiltonian_rwa(fields.omega1[0], fields.omega2[0], atom);
    for i in 0..n - 1 {
        let h_mid = hamiltonian_rwa(
            midpoint(&fields.omega1, i),
            midpoint(&fields.omega2, i),
            atom,
        );
        let h_end = hamiltonian_rwa(fields.omega1[i + 1], fields.omega2[i + 1], atom);

        let k1 = master_rhs(&rho, &h_start, atom);
        let k2 = master_rhs(&(rho + k1 * half), &h_mid, atom);
        let k3 = master_rhs(&(rho + k2 * half), &h_mid, atom);
        let k4 = master_rhs(&(rho + k3 * full), &h_end, atom);
        rho = hermitize(&(rho + (k1 + (k2 + k3) * two + k4) * sixth));

        let state = DensityMatrix(rho);
        if !state.is_finite() {
            return Err(Error::IntegrationFailure {
                xi: None,
                tau: grid.tau(i + 1),
            });
        }
        max_trace = max_trace.max((state.trace() - 1.0).abs());
        max_deficit = max_deficit.max(state.positivity_deficit());
        states.push(state);
        h_start = h_end;
    }

    Ok(SliceEvolution {
        states,
        steps: n - 1,
        max_trace_deviation: max_trace,
        max_positivity_deficit: max_deficit,
    })
}
