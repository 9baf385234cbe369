//! Dressed states of the rotating-frame Hamiltonian in the
//! `{|0>, |s~>, |a~>}` basis.
//!
//! The rotating frame removes the fast phases of `Omega_s` and `Omega_a`, so
//! the Hamiltonian is real symmetric and its eigenvectors can be followed
//! continuously through the chirp.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::basis::{instantaneous_detuning, PhaseTrack};
use crate::error::{Error, Result};
use crate::fields::SaFieldSlice;

/// Eigenvalue splittings below this are treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 500;

/// Bare states of the rotating frame, in matrix order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diabatic {
    Excited,
    Symmetric,
    Antisymmetric,
}

impl Diabatic {
    pub const ALL: [Diabatic; 3] = [Diabatic::Excited, Diabatic::Symmetric, Diabatic::Antisymmetric];

    pub fn index(self) -> usize {
        match self {
            Diabatic::Excited => 0,
            Diabatic::Symmetric => 1,
            Diabatic::Antisymmetric => 2,
        }
    }

    pub fn vector(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Diabatic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diabatic::Excited => "0",
            Diabatic::Symmetric => "s",
            Diabatic::Antisymmetric => "a",
        })
    }
}

/// `H / hbar = -[ phi_s' |s~><s~| + phi_a' |a~><a~| + |Omega_s| (|0><s~| + h.c.) + |Omega_a| (|0><a~| + h.c.) ]`.
pub fn rotating_hamiltonian(
    sa: &SaFieldSlice,
    track_s: &PhaseTrack,
    track_a: &PhaseTrack,
) -> Result<Vec<Matrix3<f64>>> {
    let n = sa.len();
    for (what, len) in [
        ("omega_a", sa.omega_a.len()),
        ("phase track s", track_s.len()),
        ("phase track a", track_a.len()),
    ] {
        if len != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                got: len,
            });
        }
    }
    let ds = regularized_detuning(track_s)?;
    let da = regularized_detuning(track_a)?;
    Ok((0..n)
        .map(|i| {
            let gs = sa.omega_s[i].norm();
            let ga = sa.omega_a[i].norm();
            Matrix3::new(0.0, -gs, -ga, -gs, -ds[i], 0.0, -ga, 0.0, -da[i])
        })
        .collect())
}

/// [`instantaneous_detuning`] with samples below the amplitude floor
/// replaced by linear interpolation between the nearest valid neighbours
/// (held constant past the ends). A track without valid samples gives zero.
#[allow(clippy::needless_range_loop)]
pub fn regularized_detuning(track: &PhaseTrack) -> Result<Vec<f64>> {
    let raw = instantaneous_detuning(track)?;
    let valid: Vec<usize> = (0..raw.len()).filter(|&i| !track.below_floor[i]).collect();
    let (Some(&first), Some(&last)) = (valid.first(), valid.last()) else {
        return Ok(vec![0.0; raw.len()]);
    };
    let mut out = raw.clone();
    for v in &mut out[..first] {
        *v = raw[first];
    }
    for v in &mut out[last + 1..] {
        *v = raw[last];
    }
    for pair in valid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b > a + 1 {
            let (ta, tb) = (track.tau[a], track.tau[b]);
            for i in a + 1..b {
                let w = (track.tau[i] - ta) / (tb - ta);
                out[i] = raw[a] * (1.0 - w) + raw[b] * w;
            }
        }
    }
    Ok(out)
}

/// Continuity-sorted eigensystem along tau.
///
/// Tracks are ordered `lambda1, lambda2, lambda3` by their diabatic state at
/// the first sample: `|a~>`, `|0>` and `|s~>` respectively.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTracks {
    pub tau: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    /// Column `t` is the eigenvector of track `t`.
    pub vectors: Vec<Matrix3<f64>>,
    pub labels: [Diabatic; 3],
    /// Samples where some pair of eigenvalues is closer than
    /// [`DEGENERACY_THRESHOLD`].
    pub degenerate: Vec<bool>,
}

const TRACK_ORDER: [Diabatic; 3] = [Diabatic::Antisymmetric, Diabatic::Excited, Diabatic::Symmetric];

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn eigentracks(tau: &[f64], hamiltonians: &[Matrix3<f64>]) -> Result<EigenTracks> {
    let n = hamiltonians.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if tau.len() != n {
        return Err(Error::LengthMismatch {
            what: "tau",
            expected: n,
            got: tau.len(),
        });
    }

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    let mut reference = Matrix3::from_columns(&TRACK_ORDER.map(Diabatic::vector));

    for (i, h) in hamiltonians.iter().enumerate() {
        if !h.iter().all(|x| x.is_finite()) {
            return Err(Error::Eigensolver(i));
        }
        let eig = SymmetricEigen::try_new(*h, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::Eigensolver(i))?;
        let (vals, vecs, degen) = follow(&reference, &eig, h);
        reference = vecs;
        values.push(vals);
        vectors.push(vecs);
        degenerate.push(degen);
    }

    Ok(EigenTracks {
        tau: tau.to_vec(),
        values,
        vectors,
        labels: TRACK_ORDER,
        degenerate,
    })
}

/// Matches a fresh eigensystem to the previous track vectors.
#[allow(clippy::needless_range_loop)]
fn follow(
    reference: &Matrix3<f64>,
    eig: &SymmetricEigen<f64, nalgebra::U3>,
    h: &Matrix3<f64>,
) -> ([f64; 3], Matrix3<f64>, bool) {
    let overlap = Matrix3::from_fn(|t, k| {
        reference.column(t).dot(&eig.eigenvectors.column(k)).powi(2)
    });
    let perm = PERMUTATIONS
        .iter()
        .max_by(|a, b| {
            let sa: f64 = (0..3).map(|t| overlap[(t, a[t])]).sum();
            let sb: f64 = (0..3).map(|t| overlap[(t, b[t])]).sum();
            sa.total_cmp(&sb)
        })
        .expect("non-empty permutation table");

    let lam = eig.eigenvalues;
    let mut vecs = Matrix3::from_fn(|r, t| eig.eigenvectors[(r, perm[t])]);

    // Inside a degenerate cluster the solver's vectors are arbitrary; keep
    // the previous vectors projected onto the cluster instead.
    let mut degen = false;
    let mut cluster_of = [0usize, 1, 2];
    for a in 0..3 {
        for b in a + 1..3 {
            if (lam[a] - lam[b]).abs() < DEGENERACY_THRESHOLD {
                degen = true;
                let (lo, hi) = (cluster_of[a].min(cluster_of[b]), cluster_of[a].max(cluster_of[b]));
                for c in cluster_of.iter_mut() {
                    if *c == hi {
                        *c = lo;
                    }
                }
            }
        }
    }
    if degen {
        for root in 0..3 {
            let members: Vec<usize> = (0..3).filter(|&k| cluster_of[k] == root).collect();
            if members.len() < 2 {
                continue;
            }
            realign_cluster(reference, eig, perm, &members, &mut vecs);
        }
    }

    let mut vals = [0.0; 3];
    for t in 0..3 {
        let mut v = vecs.column(t).into_owned();
        if v.dot(&reference.column(t)) < 0.0 {
            v = -v;
        }
        vals[t] = v.dot(&(h * v));
        vecs.set_column(t, &v);
    }
    (vals, vecs, degen)
}

fn realign_cluster(
    reference: &Matrix3<f64>,
    eig: &SymmetricEigen<f64, nalgebra::U3>,
    perm: &[usize; 3],
    members: &[usize],
    vecs: &mut Matrix3<f64>,
) {
    let basis: Vec<Vector3<f64>> = members
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let tracks: Vec<usize> = (0..3).filter(|t| members.contains(&perm[*t])).collect();
    let mut done: Vec<Vector3<f64>> = Vec::new();
    for &t in &tracks {
        let prev = reference.column(t);
        let mut v: Vector3<f64> = basis.iter().map(|u| u * u.dot(&prev)).sum();
        for d in &done {
            v -= d * d.dot(&v);
        }
        let norm = v.norm();
        if norm < 1e-6 {
            // previous vector nearly orthogonal to the cluster: fall back to
            // whatever is left of the cluster basis
            v = basis
                .iter()
                .map(|u| {
                    let mut w = *u;
                    for d in &done {
                        w -= d * d.dot(&w);
                    }
                    w
                })
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("cluster has members");
        }
        let v = v.normalize();
        done.push(v);
        vecs.set_column(t, &v);
    }
}

impl EigenTracks {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn track(&self, t: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[t]).collect()
    }

    pub fn vector(&self, t: usize, i: usize) -> Vector3<f64> {
        self.vectors[i].column(t).into_owned()
    }

    /// Diabatic state with the largest weight in track `t` at sample `i`.
    pub fn dominant(&self, t: usize, i: usize) -> Diabatic {
        let v = self.vector(t, i);
        Diabatic::ALL
            .into_iter()
            .max_by(|a, b| v[a.index()].abs().total_cmp(&v[b.index()].abs()))
            .expect("three diabatic states")
    }

    /// Largest `||H v - lambda v||` over samples and tracks.
    pub fn max_residual(&self, hamiltonians: &[Matrix3<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, h) in hamiltonians.iter().enumerate() {
            for t in 0..3 {
                let v = self.vector(t, i);
                worst = worst.max((h * v - v * self.values[i][t]).norm());
            }
        }
        worst
    }

    /// Largest deviation of `V^T V` from the identity.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v.transpose() * v - Matrix3::identity()).abs().max())
            .fold(0.0, f64::max)
    }
}

/// `|Omega_a| / sqrt(|Omega_s|^2 + |Omega_a|^2)`, zero where both vanish.
pub fn dark_state_residual(sa: &SaFieldSlice) -> Vec<f64> {
    sa.omega_s
        .iter()
        .zip(&sa.omega_a)
        .map(|(s, a)| {
            let total = s.norm().hypot(a.norm());
            if total == 0.0 {
                0.0
            } else {
                a.norm() / total
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityMargin {
    /// `max |<v_i | d v_j / d tau>| / |lambda_i - lambda_j|`.
    pub value: f64,
    pub tau: f64,
    pub pair: (usize, usize),
    /// Pair-samples excluded as degenerate.
    pub skipped: usize,
}

pub fn adiabaticity_margin(tracks: &EigenTracks) -> Result<AdiabaticityMargin> {
    margin_over(tracks, &[(0, 1), (0, 2), (1, 2)])
}

/// [`adiabaticity_margin`] restricted to one pair of tracks.
pub fn adiabaticity_margin_pair(tracks: &EigenTracks, i: usize, j: usize) -> Result<AdiabaticityMargin> {
    if i == j || i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!("invalid track pair ({i}, {j})")));
    }
    margin_over(tracks, &[(i.min(j), i.max(j))])
}

fn margin_over(tracks: &EigenTracks, pairs: &[(usize, usize)]) -> Result<AdiabaticityMargin> {
    let n = tracks.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    let mut best: Option<AdiabaticityMargin> = None;
    let mut skipped = 0;
    for k in 1..n - 1 {
        let dt = tracks.tau[k + 1] - tracks.tau[k - 1];
        for &(i, j) in pairs {
            let gap = (tracks.values[k][i] - tracks.values[k][j]).abs();
            if gap < DEGENERACY_THRESHOLD || tracks.degenerate[k - 1] || tracks.degenerate[k + 1] {
                skipped += 1;
                continue;
            }
            let dv = (tracks.vector(j, k + 1) - tracks.vector(j, k - 1)) / dt;
            let ratio = tracks.vector(i, k).dot(&dv).abs() / gap;
            if best.is_none_or(|b| ratio > b.value) {
                best = Some(AdiabaticityMargin {
                    value: ratio,
                    tau: tracks.tau[k],
                    pair: (i, j),
                    skipped: 0,
                });
            }
        }
    }
    best.map(|b| AdiabaticityMargin { skipped, ..b })
        .ok_or(Error::AllDegenerate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn axis(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn phase_track(tau: &[f64], phase: impl Fn(f64) -> f64) -> PhaseTrack {
        PhaseTrack {
            tau: tau.to_vec(),
            phase: tau.iter().map(|&t| phase(t)).collect(),
            below_floor: vec![false; tau.len()],
            jumps: Vec::new(),
        }
    }

    #[test]
    fn zero_fields_give_detuning_diagonal() {
        let tau = axis(-1.0, 1.0, 21);
        let sa = SaFieldSlice {
            omega_s: vec![C64::from(0.0); 21],
            omega_a: vec![C64::from(0.0); 21],
        };
        let ts = phase_track(&tau, |t| -7.0 * t * t);
        let ta = phase_track(&tau, |t| 2.0 * t);
        let hs = rotating_hamiltonian(&sa, &ts, &ta).unwrap();
        for (i, h) in hs.iter().enumerate() {
            assert_eq!(h[(0, 0)], 0.0);
            assert!((h[(1, 1)] - 14.0 * tau[i]).abs() < 1e-9 || i == 0 || i == 20);
            assert!((h[(2, 2)] + 2.0).abs() < 1e-9);
            assert_eq!(h[(0, 1)], 0.0);
            assert_eq!(*h, h.transpose());
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let tau = axis(-1.0, 1.0, 5);
        let sa = SaFieldSlice {
            omega_s: vec![C64::from(1.0); 5],
            omega_a: vec![C64::from(0.0); 4],
        };
        let t = PhaseTrack::flat(&tau);
        assert!(rotating_hamiltonian(&sa, &t, &t).is_err());
    }

    #[test]
    fn constant_hamiltonian_has_zero_margin() {
        let h = Matrix3::new(0.0, -1.0, 0.0, -1.0, 2.0, 0.5, 0.0, 0.5, -3.0);
        let tau = axis(0.0, 1.0, 11);
        let tracks = eigentracks(&tau, &vec![h; 11]).unwrap();
        let m = adiabaticity_margin(&tracks).unwrap();
        assert!(m.value < 1e-12);
        assert!(tracks.max_residual(&vec![h; 11]) < 1e-12);
        assert!(tracks.max_orthonormality_error() < 1e-12);
    }

    #[test]
    fn needs_two_samples() {
        assert!(eigentracks(&[0.0], &[Matrix3::zeros()]).is_err());
    }

    #[test]
    fn fully_degenerate_margin_errors() {
        let tau = axis(0.0, 1.0, 5);
        let tracks = eigentracks(&tau, &vec![Matrix3::zeros(); 5]).unwrap();
        assert!(tracks.degenerate.iter().all(|&d| d));
        assert_eq!(adiabaticity_margin(&tracks).unwrap_err(), Error::AllDegenerate);
        // degenerate start keeps the diabatic labels
        assert_eq!(tracks.dominant(0, 0), Diabatic::Antisymmetric);
        assert_eq!(tracks.dominant(1, 4), Diabatic::Excited);
    }

    #[test]
    fn crossing_is_followed_by_overlap() {
        // diabatic crossing of |s~> and |a~> with a weak coupling through |0>
        let tau = axis(-2.0, 2.0, 401);
        let hs: Vec<Matrix3<f64>> = tau
            .iter()
            .map(|&t| Matrix3::new(5.0, 0.0, 0.0, 0.0, t, 0.0, 0.0, 0.0, -t))
            .collect();
        let tracks = eigentracks(&tau, &hs).unwrap();
        // exact crossing: labels stay diabatic on both sides
        assert_eq!(tracks.dominant(0, 0), Diabatic::Antisymmetric);
        assert_eq!(tracks.dominant(0, 400), Diabatic::Antisymmetric);
        assert_eq!(tracks.dominant(2, 400), Diabatic::Symmetric);
        assert!((tracks.values[400][0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn dark_residual_limits() {
        let sa = SaFieldSlice {
            omega_s: vec![C64::from(0.0), C64::from(3.0), C64::from(0.0)],
            omega_a: vec![C64::from(0.0), C64::from(0.0), C64::new(0.0, 2.0)],
        };
        assert_eq!(dark_state_residual(&sa), vec![0.0, 0.0, 1.0]);
    }
}
