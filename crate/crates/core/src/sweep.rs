//! One-dimensional parameter sweeps with a fixed CSV schema.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{evaluate_row, RowValues};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Meters.
    Distance,
    /// dBm.
    Eirp,
    /// Milliseconds.
    CoherenceTime,
    /// Operating bandwidth in MHz; pilots are optimized at each point.
    Bandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Sweep axis. `start` and `stop` are in the variable's unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn new(
        variable: SweepVariable,
        start: f64,
        stop: f64,
        points: usize,
        spacing: Spacing,
    ) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(Error::config(format!("sweep needs start < stop, got {start} .. {stop}")));
        }
        if points < 2 {
            return Err(Error::config(format!("sweep needs at least 2 points, got {points}")));
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err(Error::config("log spacing needs start > 0"));
        }
        Ok(SweepSpec { variable, start, stop, points, spacing })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect()
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "x",
    "W_opt_hz",
    "alpha_opt",
    "pilots",
    "rho_opt",
    "g_rho_db",
    "rate_bps",
    "rate_fixed_1ghz_bps",
    "rate_csir_bps",
    "rate_fsk_bps",
    "rate_mi_bps",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    #[serde(flatten)]
    pub values: Option<RowValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn point(scn: &Scenario, var: SweepVariable, x: f64) -> Result<RowValues> {
    match var {
        SweepVariable::Distance => evaluate_row(&scn.with_distance(x)?, None),
        SweepVariable::Eirp => evaluate_row(&scn.with_eirp(x)?, None),
        SweepVariable::CoherenceTime => evaluate_row(&scn.with_tc(x * 1e-3)?, None),
        SweepVariable::Bandwidth => evaluate_row(scn, Some(x * 1e6)),
    }
}

/// Evaluates every sweep point. Rows come back in input order; a failed point
/// keeps its row with the error message and no values.
///
/// `threads = None` uses rayon's global pool.
pub fn run_sweep(scn: &Scenario, spec: &SweepSpec, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    let xs = spec.values();
    let job = || {
        xs.par_iter()
            .map(|&x| match point(scn, spec.variable, x) {
                Ok(v) => SweepRow { x, values: Some(v), error: None },
                Err(e) => SweepRow { x, values: None, error: Some(e.to_string()) },
            })
            .collect::<Vec<_>>()
    };
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Writes the fixed schema; failed rows get empty cells.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        let mut rec = vec![r.x.to_string()];
        match &r.values {
            Some(v) => rec.extend([
                v.w_opt_hz.to_string(),
                v.alpha_opt.to_string(),
                v.pilots.to_string(),
                v.rho_opt.to_string(),
                v.g_rho_db.to_string(),
                v.rate_bps.to_string(),
                v.rate_fixed_bps.to_string(),
                v.rate_csir_bps.to_string(),
                v.rate_fsk_bps.to_string(),
                v.rate_mi_bps.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), CSV_COLUMNS.len() - 1)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
