use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze, execute, sweep_seed, write_artifacts, write_diagnostics, ExperimentConfig, Problem, RunOutput};
use crate::error::{Error, Result};
use crate::grad::LossKind;

/// What a sweep varies. `Eta` and `M` only change the diagnostics, so they
/// share one trajectory; `Width` and `P` retrain with derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eta,
    M,
    Width,
    P,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::M => "m",
            SweepAxis::Width => "width",
            SweepAxis::P => "p",
        }
    }

    pub fn retrains(self) -> bool {
        matches!(self, SweepAxis::Width | SweepAxis::P)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweepAxis::Eta),
            "m" => Ok(SweepAxis::M),
            "width" => Ok(SweepAxis::Width),
            "p" => Ok(SweepAxis::P),
            other => Err(Error::InvalidArgument(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// One merged result row; metrics are absent on error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub index: usize,
    pub value: f64,
    pub seed: u64,
    pub error: Option<String>,
    /// Cutoff the per-row ratios refer to.
    pub eta: f64,
    pub final_train_loss: f64,
    pub final_residual: f64,
    pub ratio_high_t0: f64,
    pub out_ratio_high_t0: f64,
    pub first_window_quotient_high: f64,
    pub dissipation_fraction: f64,
    pub decay_slope_t0: f64,
    pub decay_r2_t0: f64,
    pub checks_failed: usize,
}

impl SweepRow {
    fn failed(axis: SweepAxis, index: usize, value: f64, seed: u64, err: &Error) -> Self {
        SweepRow {
            axis,
            index,
            value,
            seed,
            error: Some(err.to_string()),
            eta: f64::NAN,
            final_train_loss: f64::NAN,
            final_residual: f64::NAN,
            ratio_high_t0: f64::NAN,
            out_ratio_high_t0: f64::NAN,
            first_window_quotient_high: f64::NAN,
            dissipation_fraction: f64::NAN,
            decay_slope_t0: f64::NAN,
            decay_r2_t0: f64::NAN,
            checks_failed: 0,
        }
    }

    fn from_run(axis: SweepAxis, index: usize, value: f64, seed: u64, run: &RunOutput, eta_index: usize) -> Self {
        let table = &run.table;
        let eta = table.etas()[eta_index];
        let series = table.series(eta_index);
        let s = &run.summary;
        let fit0 = s.decay_fits.first().and_then(|f| f.rate);
        SweepRow {
            axis,
            index,
            value,
            seed,
            error: None,
            eta,
            final_train_loss: s.train_loss_final,
            final_residual: s.residual_final,
            ratio_high_t0: series[0].ratio_high,
            out_ratio_high_t0: series[0].out_ratio_high,
            first_window_quotient_high: s
                .windows
                .first()
                .map_or(f64::NAN, |w| w.quotient_high[eta_index]),
            dissipation_fraction: crate::diag::dissipation_check(&series),
            decay_slope_t0: fit0.map_or(f64::NAN, |f| f.slope),
            decay_r2_t0: fit0.map_or(f64::NAN, |f| f.r_squared),
            checks_failed: s
                .checks
                .iter()
                .filter(|c| c.status == super::CheckStatus::Fail)
                .count(),
        }
    }
}

// cutoff the per-row ratios of a non-eta sweep refer to: the first one
// above the largest tone, else the largest
fn probe_eta_index(run: &RunOutput) -> usize {
    let etas = run.table.etas();
    let top = run
        .config
        .target
        .max_frequency()
        .or_else(|| run.table.peaks().last().map(|p| p.xi))
        .unwrap_or(0.0);
    etas.iter()
        .enumerate()
        .filter(|(_, e)| **e > top)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(etas.len() - 1, |(i, _)| i)
}

fn variant(base: &ExperimentConfig, axis: SweepAxis, index: usize, value: f64) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    match axis {
        SweepAxis::Eta => c.eta.values = Some(vec![value]),
        SweepAxis::M => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(Error::config("grid.m", format!("sweep value {value} is not a grid size")));
            }
            c.grid.m = value as usize;
        }
        SweepAxis::Width => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::config("network.widths", format!("sweep value {value} is not a width")));
            }
            c.network = c.network.with_hidden_width(value as usize)?;
            c.seed = sweep_seed(base.seed, index as u64);
        }
        SweepAxis::P => {
            c.loss = LossKind::Power { p: value };
            c.seed = sweep_seed(base.seed, index as u64);
        }
    }
    if axis.retrains() {
        // keep the data fixed across the sweep
        c.samples.seed = Some(base.sample_seed());
    }
    c.validate()?;
    Ok(c)
}

/// Runs one configuration per value and merges the rows in value order.
/// Failed values become error rows; only a failing shared trajectory
/// aborts the sweep. With `out`, each run's artifacts land in
/// `out/<axis>_<index>/`.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], out: Option<&Path>) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    base.validate()?;
    let shared = if axis.retrains() {
        None
    } else {
        Some(Problem::build(base)?.train()?)
    };
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let attempt = || -> Result<SweepRow> {
                let config = variant(base, axis, i, value)?;
                let run = match &shared {
                    Some(record) => analyze(&config, record.clone())?,
                    None => execute(&config)?,
                };
                if let Some(dir) = out {
                    let dir = dir.join(format!("{}_{i}", axis.name()));
                    if axis.retrains() {
                        write_artifacts(&run, &dir)?;
                    } else {
                        write_diagnostics(&run, &dir)?;
                    }
                }
                let e = if axis == SweepAxis::Eta { 0 } else { probe_eta_index(&run) };
                Ok(SweepRow::from_run(axis, i, value, config.seed, &run, e))
            };
            attempt().unwrap_or_else(|err| {
                let seed = if axis.retrains() { sweep_seed(base.seed, i as u64) } else { base.seed };
                log::warn!("sweep {} = {value} failed: {err}", axis.name());
                SweepRow::failed(axis, i, value, seed, &err)
            })
        })
        .collect();
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "axis",
    "index",
    "value",
    "seed",
    "status",
    "eta",
    "final_train_loss",
    "final_residual",
    "ratio_high_t0",
    "out_ratio_high_t0",
    "first_window_quotient_high",
    "dissipation_fraction",
    "decay_slope_t0",
    "decay_r2_t0",
    "checks_failed",
    "error",
];

/// Merged CSV: one row per value, error rows keep their position.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for r in rows {
        let status = if r.error.is_some() { "error" } else { "ok" };
        let nums = [
            r.eta,
            r.final_train_loss,
            r.final_residual,
            r.ratio_high_t0,
            r.out_ratio_high_t0,
            r.first_window_quotient_high,
            r.dissipation_fraction,
            r.decay_slope_t0,
            r.decay_r2_t0,
        ];
        write!(w, "{},{},{:.16e},{},{status}", r.axis.name(), r.index, r.value, r.seed)?;
        for x in nums {
            write!(w, ",{x:.16e}")?;
        }
        let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], "'");
        writeln!(w, ",{},\"{err}\"", r.checks_failed)?;
    }
    w.flush()
}
