//! Plot-ready CSV and JSON tables.
//!
//! Numbers are written with 17 significant digits so every value survives
//! a text round trip.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chirpmatch_core::basis::rho_to_sa;
use chirpmatch_core::propagation::SimulationResult;
use chirpmatch_core::{DensityMatrix, C64};
use serde::Serialize;

use crate::analysis::Analysis;
use crate::error::{CliError, Result};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_complex(row: &mut Vec<String>, z: C64) {
    row.push(num(z.re));
    row.push(num(z.im));
}

pub(crate) struct Table {
    writer: csv::Writer<BufWriter<File>>,
    rows: usize,
}

impl Table {
    pub(crate) fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(header)?;
        Ok(Self { writer, rows: 0 })
    }

    pub(crate) fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes and returns the number of data rows.
    pub(crate) fn finish(mut self) -> Result<usize> {
        self.writer.flush().map_err(|e| CliError::Csv(e.into()))?;
        Ok(self.rows)
    }
}

/// Tau indices written to the per-sample tables.
fn sample_indices(n_tau: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_tau).step_by(stride).collect();
    if idx.last() != Some(&(n_tau - 1)) {
        idx.push(n_tau - 1);
    }
    idx
}

pub fn write_fields(path: &Path, result: &SimulationResult, analysis: &Analysis, stride: usize) -> Result<usize> {
    let mut t = Table::create(
        path,
        &[
            "xi", "tau", "re_omega1", "im_omega1", "re_omega2", "im_omega2", "re_omega_s", "im_omega_s",
            "re_omega_a", "im_omega_a",
        ],
    )?;
    for (s, a) in result.slices.iter().zip(&analysis.slices) {
        for i in sample_indices(analysis.tau.len(), stride) {
            let mut row = vec![num(s.xi), num(analysis.tau[i])];
            push_complex(&mut row, s.fields.omega1[i]);
            push_complex(&mut row, s.fields.omega2[i]);
            push_complex(&mut row, a.sa.omega_s[i]);
            push_complex(&mut row, a.sa.omega_a[i]);
            t.row(&row)?;
        }
    }
    t.finish()
}

/// `(xi, tau, rho)` rows: the full trajectory when stored, otherwise the
/// final state only.
fn state_rows<'a>(
    result: &'a SimulationResult,
    tau: &'a [f64],
    stride: usize,
) -> impl Iterator<Item = (f64, f64, &'a DensityMatrix)> + 'a {
    result.slices.iter().flat_map(move |s| {
        let rows: Vec<(f64, f64, &DensityMatrix)> = match &s.trajectory {
            Some(traj) => sample_indices(tau.len(), stride)
                .into_iter()
                .map(|i| (s.xi, tau[i], &traj[i]))
                .collect(),
            None => vec![(s.xi, tau[tau.len() - 1], &s.final_state)],
        };
        rows
    })
}

pub fn write_populations(path: &Path, result: &SimulationResult, analysis: &Analysis, stride: usize) -> Result<usize> {
    let mut t = Table::create(path, &["xi", "tau", "rho00", "rho11", "rho22", "p_s", "p_a"])?;
    for (xi, tau, rho) in state_rows(result, &analysis.tau, stride) {
        let p = rho.populations();
        let q = rho_to_sa(rho, &analysis.basis).populations();
        t.row(&[num(xi), num(tau), num(p[0]), num(p[1]), num(p[2]), num(q[1]), num(q[2])])?;
    }
    t.finish()
}

pub fn write_coherences(path: &Path, result: &SimulationResult, analysis: &Analysis, stride: usize) -> Result<usize> {
    let mut t = Table::create(
        path,
        &[
            "xi", "tau", "re_rho01", "im_rho01", "re_rho02", "im_rho02", "re_rho12", "im_rho12", "re_rho0s",
            "im_rho0s", "re_rho0a", "im_rho0a",
        ],
    )?;
    for (xi, tau, rho) in state_rows(result, &analysis.tau, stride) {
        let sa = rho_to_sa(rho, &analysis.basis);
        let mut row = vec![num(xi), num(tau)];
        for z in [rho.get(0, 1), rho.get(0, 2), rho.get(1, 2), sa.get(0, 1), sa.get(0, 2)] {
            push_complex(&mut row, z);
        }
        t.row(&row)?;
    }
    t.finish()
}

pub fn write_eigentracks(path: &Path, analysis: &Analysis, stride: usize) -> Result<usize> {
    let mut t = Table::create(
        path,
        &["xi", "tau", "lambda1", "lambda2", "lambda3", "label1", "label2", "label3"],
    )?;
    for s in &analysis.slices {
        for i in sample_indices(analysis.tau.len(), stride) {
            let v = s.tracks.values[i];
            let mut row = vec![num(s.xi), num(analysis.tau[i]), num(v[0]), num(v[1]), num(v[2])];
            row.extend((0..3).map(|k| s.tracks.dominant(k, i).to_string()));
            t.row(&row)?;
        }
    }
    t.finish()
}

pub fn write_ledger(path: &Path, analysis: &Analysis) -> Result<usize> {
    let mut t = Table::create(path, &["xi", "e1", "e2", "e_s", "e_a", "deposited"])?;
    for l in &analysis.ledger {
        t.row(&[num(l.xi), num(l.e1), num(l.e2), num(l.e_s), num(l.e_a), num(l.deposited)])?;
    }
    t.finish()
}

/// One row per stored depth: final populations, excitation bound, pulse
/// area and phase-jump count.
pub fn write_finals(path: &Path, analysis: &Analysis) -> Result<usize> {
    let mut t = Table::create(
        path,
        &[
            "xi", "rho00", "rho11", "rho22", "p0", "p_s", "p_a", "max_rho00", "re_rho12", "im_rho12",
            "area_s", "phase_jumps",
        ],
    )?;
    for (p, s) in analysis.populations.iter().zip(&analysis.slices) {
        let mut row = vec![num(p.xi)];
        row.extend(p.bare.iter().chain(&p.sa).map(|x| num(*x)));
        row.push(num(p.max_excitation));
        push_complex(&mut row, p.rho12);
        row.push(num(s.area_s));
        row.push(s.jumps.len().to_string());
        t.row(&row)?;
    }
    t.finish()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(CliError::io(path))?;
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}
