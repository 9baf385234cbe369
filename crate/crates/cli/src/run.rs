//! Single runs and parameter sweeps.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chirpmatch_core::basis::SABasis;
use chirpmatch_core::diagnostics::{final_populations, final_ps_spread, PopulationSummary};
use chirpmatch_core::propagation::{propagate, SimulationResult, StorageMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{analyse, Analysis};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{self, num, Table};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    /// Data rows for tables, absent for JSON documents.
    pub rows: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn finish_manifest(out: &Path, hash: String, started_at: String, mut files: Vec<FileEntry>) -> Result<RunManifest> {
    files.push(FileEntry {
        name: MANIFEST.into(),
        rows: None,
    });
    files.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = RunManifest {
        config_hash: hash,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now(),
        files,
    };
    output::write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Everything a run produced, for callers that want more than the files.
pub struct RunOutput {
    pub manifest: RunManifest,
    pub result: SimulationResult,
    pub analysis: Analysis,
}

/// Propagates, analyses and writes every output table into `out`.
///
/// Outputs are written even when an invariant is breached; the breach is
/// then reported as [`CliError::Invariant`].
pub fn run_full(config: &RunConfig, out: &Path) -> Result<RunOutput> {
    config.validate()?;
    let started_at = now();
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let result = propagate(&config.simulation())?;
    let analysis = analyse(config, &result)?;
    let stride = config.output.tau_stride;

    let mut files = Vec::new();
    let mut table = |name: &str, rows: usize| {
        files.push(FileEntry {
            name: name.into(),
            rows: Some(rows),
        })
    };
    table("fields.csv", output::write_fields(&out.join("fields.csv"), &result, &analysis, stride)?);
    table(
        "populations.csv",
        output::write_populations(&out.join("populations.csv"), &result, &analysis, stride)?,
    );
    table(
        "coherences.csv",
        output::write_coherences(&out.join("coherences.csv"), &result, &analysis, stride)?,
    );
    table("eigentracks.csv", output::write_eigentracks(&out.join("eigentracks.csv"), &analysis, stride)?);
    table("ledger.csv", output::write_ledger(&out.join("ledger.csv"), &analysis)?);
    table("finals.csv", output::write_finals(&out.join("finals.csv"), &analysis)?);

    #[derive(Serialize)]
    struct Fits<'a> {
        fits: &'a std::collections::BTreeMap<String, chirpmatch_core::FitResult>,
        unavailable: &'a std::collections::BTreeMap<String, String>,
    }
    output::write_json(
        &out.join("fits.json"),
        &Fits {
            fits: &analysis.fits,
            unavailable: &analysis.fit_errors,
        },
    )?;
    output::write_json(&out.join("summary.json"), &analysis.summary)?;
    for name in ["fits.json", "summary.json"] {
        files.push(FileEntry {
            name: name.into(),
            rows: None,
        });
    }

    let manifest = finish_manifest(out, config.hash(), started_at, files)?;
    if !result.meta.invariants_hold() {
        return Err(CliError::Invariant(format!(
            "max trace deviation {:e}, max positivity deficit {:e}",
            result.meta.max_trace_deviation, result.meta.max_positivity_deficit
        )));
    }
    Ok(RunOutput {
        manifest,
        result,
        analysis,
    })
}

pub fn run(config: &RunConfig, out: &Path) -> Result<RunManifest> {
    run_full(config, out).map(|o| o.manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Theta1,
    Theta2,
    Beta,
    Alpha,
    Gamma,
}

impl FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta1" => Ok(Self::Theta1),
            "theta2" => Ok(Self::Theta2),
            "beta" => Ok(Self::Beta),
            "alpha" => Ok(Self::Alpha),
            "Gamma" | "gamma" => Ok(Self::Gamma),
            other => Err(CliError::Invalid(format!(
                "unknown sweep axis `{other}` (expected theta1, theta2, beta, alpha or Gamma)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Theta1 => "theta1",
            Self::Theta2 => "theta2",
            Self::Beta => "beta",
            Self::Alpha => "alpha",
            Self::Gamma => "Gamma",
        })
    }
}

impl SweepAxis {
    pub fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            Self::Theta1 => config.pulses.theta1 = value,
            Self::Theta2 => config.pulses.theta2 = value,
            Self::Beta => config.pulses.beta = value,
            Self::Alpha => config.medium.alpha = value,
            Self::Gamma => config.medium.gamma = value,
        }
    }
}

/// Final state at `xi_max` of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: PopulationSummary,
    /// Spread of the final `P_s` from the transparency depth on.
    pub ps_spread: Option<f64>,
    /// Mixing angle of the dominant ground-state component,
    /// `atan2(c2, c1)` with `c1 >= 0`.
    pub superposition_angle: f64,
    /// `atan2(-theta1, theta2)`, the angle of the antisymmetric state.
    pub dark_angle: f64,
}

/// Angle of the leading eigenvector of the ground-state block.
fn superposition_angle(rho: &chirpmatch_core::DensityMatrix) -> f64 {
    let (a, d, b) = (rho.get(1, 1).re, rho.get(2, 2).re, rho.get(1, 2));
    // leading eigenvector of [[a, b], [b*, d]] is (b, lmax - a) up to phase
    let lmax = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    let (c1, c2) = if b.norm() > 1e-300 {
        let phase = b.conj() / b.norm();
        (b.norm(), ((lmax - a) * phase).re)
    } else if a >= d {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    c2.atan2(c1)
}

pub fn sweep_point(base: &RunConfig, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let mut cfg = base.clone();
    axis.apply(&mut cfg, value);
    cfg.output.storage = StorageMode::Lean;
    cfg.validate()?;
    let sim = cfg.simulation();
    let result = propagate(&sim)?;
    if !result.meta.invariants_hold() {
        return Err(CliError::Invariant(format!("{axis} = {value}")));
    }
    let basis = SABasis::new(sim.theta1, sim.theta2)?;
    let pops = final_populations(&result, &basis);
    let last = result.slices.last().expect("at least one slice");
    Ok(SweepRow {
        value,
        ps_spread: final_ps_spread(&pops, cfg.analysis.transparency_xi, f64::INFINITY).ok(),
        summary: pops.last().expect("at least one slice").clone(),
        superposition_angle: superposition_angle(&last.final_state),
        dark_angle: (-sim.theta1).atan2(sim.theta2),
    })
}

/// One lean run per value on a pool of `workers` threads, aggregated into
/// `sweep.csv` in input order.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[f64], out: &Path, workers: usize) -> Result<RunManifest> {
    if values.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one value".into()));
    }
    base.validate()?;
    let started_at = now();
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| sweep_point(base, axis, v))
            .collect::<Result<Vec<_>>>()
    })?;

    let path = out.join("sweep.csv");
    let mut t = Table::create(
        &path,
        &[
            axis.to_string().as_str(),
            "xi",
            "rho00",
            "rho11",
            "rho22",
            "p0",
            "p_s",
            "p_a",
            "max_rho00",
            "re_rho12",
            "im_rho12",
            "abs_rho12",
            "ps_spread",
            "superposition_angle",
            "dark_angle",
        ],
    )?;
    for r in &rows {
        let s = &r.summary;
        let mut row = vec![num(r.value), num(s.xi)];
        row.extend(s.bare.iter().chain(&s.sa).map(|x| num(*x)));
        row.push(num(s.max_excitation));
        row.push(num(s.rho12.re));
        row.push(num(s.rho12.im));
        row.push(num(s.rho12.norm()));
        row.push(r.ps_spread.map(num).unwrap_or_default());
        row.push(num(r.superposition_angle));
        row.push(num(r.dark_angle));
        t.row(&row)?;
    }
    let n = t.finish()?;

    #[derive(Serialize)]
    struct SweepKey<'a> {
        base: &'a RunConfig,
        axis: SweepAxis,
        values: &'a [f64],
    }
    let key = serde_json::to_vec(&SweepKey { base, axis, values })?;
    finish_manifest(
        out,
        hex::encode(Sha256::digest(&key)),
        started_at,
        vec![FileEntry {
            name: "sweep.csv".into(),
            rows: Some(n),
        }],
    )
}
