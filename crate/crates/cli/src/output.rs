//! Trajectory and summary writers.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so identical runs give identical bytes. An undefined Fano factor
//! (vacuum) is an empty CSV field and `null` in JSON.

use std::io::{self, Write};

use micromaser::analytics::{trapping_condition, DEFAULT_M_SEARCH_LIMIT};
use micromaser::{CollisionRange, ModelParams, RunOptions, RunOutcome, TrajectoryRecord, TrappingSpec};
use serde::Serialize;

use crate::config::ThetaSpec;

pub const CSV_HEADER: &str = "k,energy,purity,fano,ergotropy,trace_leak,n_max";

pub const THRESHOLD_NOTE: &str =
    "classification thresholds are engineering choices, not physical parameters";

/// Shortest round-trip decimal form of `x`.
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_csv<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let o = &r.observables;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k,
            format_number(o.energy),
            format_number(o.purity),
            o.fano.map(format_number).unwrap_or_default(),
            format_number(o.ergotropy),
            format_number(o.trace_leak),
            r.n_max_used
        )?;
    }
    w.flush()
}

/// One trajectory row, keyed like the CSV columns.
#[derive(Debug, Serialize)]
pub struct Row {
    pub k: usize,
    pub energy: f64,
    pub purity: f64,
    pub fano: Option<f64>,
    pub ergotropy: f64,
    pub trace_leak: f64,
    pub n_max: usize,
}

impl From<&TrajectoryRecord> for Row {
    fn from(r: &TrajectoryRecord) -> Self {
        let o = &r.observables;
        Row {
            k: r.k,
            energy: o.energy,
            purity: o.purity,
            fano: o.fano,
            ergotropy: o.ergotropy,
            trace_leak: o.trace_leak,
            n_max: r.n_max_used,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub classification: &'static str,
    pub steady_window: Option<CollisionRange>,
    pub collisions_run: usize,
    pub cumulative_leak: f64,
    pub n_max_final: usize,
    pub final_observables: Option<Row>,
    pub params: ModelParams,
    pub theta: ThetaSpec,
    pub trapping: Option<TrappingSpec>,
    pub thresholds: RunOptions,
    pub thresholds_note: &'static str,
}

impl Summary {
    pub fn new(
        params: &ModelParams,
        theta: ThetaSpec,
        options: &RunOptions,
        records: &[TrajectoryRecord],
        outcome: &RunOutcome,
    ) -> Self {
        Summary {
            classification: outcome.classification.as_str(),
            steady_window: outcome.steady_window,
            collisions_run: outcome.collisions_run,
            cumulative_leak: outcome.cumulative_leak,
            n_max_final: outcome.n_max_final,
            final_observables: records.last().map(Row::from),
            params: *params,
            theta,
            trapping: trapping_condition(params.theta, DEFAULT_M_SEARCH_LIMIT),
            thresholds: *options,
            thresholds_note: THRESHOLD_NOTE,
        }
    }
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    summary: &'a Summary,
    records: Vec<Row>,
}

pub fn write_json<W: Write>(mut w: W, summary: &Summary, records: &[TrajectoryRecord]) -> io::Result<()> {
    let doc = JsonDocument {
        summary,
        records: records.iter().map(Row::from).collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()
}

pub fn write_summary<W: Write>(mut w: W, summary: &Summary) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use micromaser::ObservableSet;

    fn record(k: usize, fano: Option<f64>) -> TrajectoryRecord {
        TrajectoryRecord {
            k,
            observables: ObservableSet {
                energy: 0.1 + 0.2,
                purity: 1.0,
                fano,
                ergotropy: 1e-20,
                mean: 0.3,
                variance: 0.0,
                trace_leak: 0.0,
            },
            n_max_used: 32,
        }
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1 + 0.2, 1.0, 14.0, 1e-20, 6.150292541, f64::MIN_POSITIVE, 123456789.125] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(14.0), "14.0");
        assert_eq!(format_number(0.5), "0.5");
    }

    #[test]
    fn csv_rows_follow_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[record(1, None), record(2, Some(0.25))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "k,energy,purity,fano,ergotropy,trace_leak,n_max\n\
             1,0.30000000000000004,1.0,,1e-20,0.0,32\n\
             2,0.30000000000000004,1.0,0.25,1e-20,0.0,32\n"
        );
    }
}
