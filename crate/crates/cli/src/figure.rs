//! Data series for the six standard figures.
//!
//! Each figure is a list of runs named by line color. Every run writes the
//! full trajectory CSV; the manifest says which column the figure plots.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use micromaser::{default_n_max, fine_tuned_theta, run_protocol, ModelParams, RunOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{write_csv, THRESHOLD_NOTE};
use crate::CliError;

pub const DEFAULT_FIGURE_COLLISIONS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSpec {
    pub label: &'static str,
    pub m_eff: f64,
    pub q: f64,
    pub c: f64,
    pub gamma_tr: f64,
    pub nbar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: u8,
    pub quantity: &'static str,
    pub description: &'static str,
    pub series: Vec<SeriesSpec>,
}

const fn series(label: &'static str, m_eff: f64, q: f64, c: f64, gamma_tr: f64) -> SeriesSpec {
    SeriesSpec {
        label,
        m_eff,
        q,
        c,
        gamma_tr,
        nbar: if gamma_tr > 0.0 { 0.15 } else { 0.0 },
    }
}

const INCOHERENT: [SeriesSpec; 4] = [
    series("blue", 15.0, 0.25, 0.0, 0.0),
    series("red", 15.6, 0.25, 0.0, 0.0),
    series("green", 15.0, 0.0, 0.0, 0.0),
    series("cyan", 15.6, 0.0, 0.0, 0.0),
];

const DISSIPATIVE: [SeriesSpec; 4] = [
    series("blue", 15.0, 0.25, 1.0, 0.1),
    series("green", 15.6, 0.25, 1.0, 0.1),
    series("red", 15.0, 0.25, 1.0, 0.001),
    series("cyan", 15.6, 0.25, 1.0, 0.001),
];

pub fn figure_spec(id: u8) -> Option<FigureSpec> {
    let (quantity, description, series) = match id {
        1 => ("energy", "incoherent charging, energy", INCOHERENT.to_vec()),
        2 => (
            "purity",
            "incoherent charging at the fine-tuned angle, purity",
            vec![INCOHERENT[0], INCOHERENT[2]],
        ),
        3 => (
            "energy",
            "coherent charging, energy",
            vec![series("blue", 15.0, 0.25, 1.0, 0.0), series("green", 15.6, 0.25, 1.0, 0.0)],
        ),
        4 => ("energy", "coherent charging with cavity loss, energy", DISSIPATIVE.to_vec()),
        5 => ("purity", "coherent charging with cavity loss, purity", DISSIPATIVE.to_vec()),
        6 => ("fano", "coherent charging with cavity loss, Fano factor", DISSIPATIVE.to_vec()),
        _ => return None,
    };
    Some(FigureSpec {
        id,
        quantity,
        description,
        series,
    })
}

#[derive(Debug, Serialize)]
pub struct SeriesEntry {
    pub label: &'static str,
    pub file: String,
    pub spec: SeriesSpec,
    pub theta: f64,
    pub n_max_initial: usize,
    pub n_max_final: usize,
    pub classification: &'static str,
    pub final_value: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub figure: u8,
    pub description: &'static str,
    pub column: &'static str,
    pub collisions: usize,
    pub decimate: usize,
    pub thresholds: RunOptions,
    pub thresholds_note: &'static str,
    pub series: Vec<SeriesEntry>,
}

fn run_series(
    figure: &FigureSpec,
    spec: &SeriesSpec,
    collisions: usize,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<SeriesEntry, CliError> {
    let theta = fine_tuned_theta(1.0, spec.m_eff);
    let params = ModelParams {
        theta,
        q: spec.q,
        c: spec.c,
        gamma_tr: spec.gamma_tr,
        nbar: spec.nbar,
        n_max: default_n_max(theta),
        collisions,
    };
    let (records, outcome) = run_protocol(&params, options)?;
    let file = format!("fig{}_{}.csv", figure.id, spec.label);
    write_csv(BufWriter::new(File::create(out_dir.join(&file))?), &records)?;
    let final_value = records.last().and_then(|r| match figure.quantity {
        "energy" => Some(r.observables.energy),
        "purity" => Some(r.observables.purity),
        _ => r.observables.fano,
    });
    Ok(SeriesEntry {
        label: spec.label,
        file,
        spec: *spec,
        theta,
        n_max_initial: params.n_max,
        n_max_final: outcome.n_max_final,
        classification: outcome.classification.as_str(),
        final_value,
    })
}

/// Runs every series of figure `id` and writes the CSV files and
/// `fig<id>_manifest.json` into `out_dir`. Series run in parallel on
/// `jobs` threads; the output does not depend on `jobs`.
pub fn cmd_figure(id: u8, out_dir: &Path, collisions: usize, decimate: usize, jobs: usize) -> Result<Manifest, CliError> {
    let figure = figure_spec(id).ok_or_else(|| CliError::Config(format!("unknown figure {id}; expected 1-6")))?;
    if decimate == 0 {
        return Err(CliError::Config("--decimate must be positive".into()));
    }
    fs::create_dir_all(out_dir)?;
    let options = RunOptions {
        decimate,
        ..RunOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} jobs: {e}")))?;
    let series = pool.install(|| {
        figure
            .series
            .par_iter()
            .map(|spec| run_series(&figure, spec, collisions, &options, out_dir))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let manifest = Manifest {
        figure: id,
        description: figure.description,
        column: figure.quantity,
        collisions,
        decimate,
        thresholds: options,
        thresholds_note: THRESHOLD_NOTE,
        series,
    };
    let path = out_dir.join(format!("fig{id}_manifest.json"));
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(manifest)
}
