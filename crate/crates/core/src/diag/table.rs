use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Peak;

/// Conditions under which a row's ratios are undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFlags {
    /// `|grad L| <= eps_g`.
    pub degenerate_grad: bool,
    /// `||dh^/dt|| <= eps_g`.
    pub degenerate_output: bool,
    /// Chain-rule `dL/dt` is exactly zero.
    pub zero_rate: bool,
}

impl RowFlags {
    pub fn is_clean(&self) -> bool {
        !(self.degenerate_grad || self.degenerate_output || self.zero_rate)
    }
}

impl fmt::Display for RowFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.degenerate_grad, "degenerate_grad"),
            (self.degenerate_output, "degenerate_output"),
            (self.zero_rate, "zero_rate"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if names.is_empty() {
            f.write_str("ok")
        } else {
            f.write_str(&names.join("|"))
        }
    }
}

/// Band quantities at one checkpoint and one cutoff `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub eta: f64,
    /// Residual energy `L = L_minus + L_plus`.
    pub l: f64,
    pub l_minus: f64,
    pub l_plus: f64,
    /// Chain-rule `dL/dt`, the sum of the two band rates.
    pub dl_dt: f64,
    pub dl_minus_dt: f64,
    pub dl_plus_dt: f64,
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub out_ratio_low: f64,
    pub out_ratio_high: f64,
    pub peak_errors: Vec<f64>,
    pub flags: RowFlags,
}

/// Rows in checkpoint-major order: `rows[c * etas.len() + e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsTable {
    etas: Vec<f64>,
    peaks: Vec<Peak>,
    rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsTable {
    pub fn new(etas: Vec<f64>, peaks: Vec<Peak>, rows: Vec<DiagnosticsRow>) -> Self {
        assert!(etas.is_empty() || rows.len() % etas.len() == 0);
        DiagnosticsTable { etas, peaks, rows }
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn checkpoints(&self) -> usize {
        if self.etas.is_empty() {
            0
        } else {
            self.rows.len() / self.etas.len()
        }
    }

    /// Rows of checkpoint `c`, one per `eta`.
    pub fn checkpoint(&self, c: usize) -> &[DiagnosticsRow] {
        let e = self.etas.len();
        &self.rows[c * e..(c + 1) * e]
    }

    /// Rows of cutoff `eta_index`, one per checkpoint.
    pub fn series(&self, eta_index: usize) -> Vec<DiagnosticsRow> {
        self.rows
            .iter()
            .skip(eta_index)
            .step_by(self.etas.len())
            .cloned()
            .collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.checkpoints()).map(|c| self.checkpoint(c)[0].t).collect()
    }

    /// `L` per checkpoint (independent of `eta`).
    pub fn residuals(&self) -> Vec<f64> {
        (0..self.checkpoints()).map(|c| self.checkpoint(c)[0].l).collect()
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "t",
    "eta",
    "L",
    "L_minus",
    "L_plus",
    "dL_minus_dt",
    "dL_plus_dt",
    "ratio_low",
    "ratio_high",
    "out_ratio_low",
    "out_ratio_high",
];

/// Writes one line per row with 17 significant digits per float.
pub fn write_csv<W: Write>(table: &DiagnosticsTable, mut w: W) -> std::io::Result<()> {
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=table.peaks.len()).map(|i| format!("peak_err_{i}")));
    header.push("flags".into());
    writeln!(w, "{}", header.join(","))?;
    for r in &table.rows {
        let fields = [
            r.t,
            r.eta,
            r.l,
            r.l_minus,
            r.l_plus,
            r.dl_minus_dt,
            r.dl_plus_dt,
            r.ratio_low,
            r.ratio_high,
            r.out_ratio_low,
            r.out_ratio_high,
        ];
        let mut line = String::new();
        for v in fields.iter().chain(&r.peak_errors) {
            line.push_str(&format!("{v:.16e},"));
        }
        line.push_str(&r.flags.to_string());
        writeln!(w, "{line}")?;
    }
    w.flush()
}
