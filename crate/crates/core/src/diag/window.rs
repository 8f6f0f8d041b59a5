use serde::{Deserialize, Serialize};

use super::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::flow::HalfLifeWindow;

/// Relative slack on `dL^-/dt <= 0`, in units of `|dL/dt|`.
pub const DISSIPATION_TOLERANCE: f64 = 1e-8;

/// Time-integrated and difference-quotient band ratios over `[T1, T2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub start: usize,
    pub end: usize,
    pub t1: f64,
    pub t2: f64,
    pub eta: f64,
    /// `int |dL^-/dt| dt`
    pub integral_low: f64,
    /// `int |dL^+/dt| dt`
    pub integral_high: f64,
    /// `int |dL/dt| dt`
    pub integral_total: f64,
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// `|L^-(T1) - L^-(T2)| / |L(T1) - L(T2)|`
    pub quotient_low: f64,
    /// `|L^+(T1) - L^+(T2)| / |L(T1) - L(T2)|`
    pub quotient_high: f64,
    /// Required decay `L(T2) <= delta L(T1)`.
    pub delta: f64,
}

fn trapezoid(rows: &[DiagnosticsRow], f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
    rows.windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
        .sum()
}

/// Window ratios for one `eta` series (one row per checkpoint) between
/// checkpoints `start` and `end`. `delta = 0.5` is the half-life form.
pub fn window_ratios(series: &[DiagnosticsRow], start: usize, end: usize, delta: f64) -> Result<WindowDiagnostics> {
    if end >= series.len() || start >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "window [{start}, {end}] outside {} checkpoints",
            series.len()
        )));
    }
    if end <= start {
        return Err(Error::WindowTooShort(end.saturating_sub(start) + 1));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let rows = &series[start..=end];
    let (a, b) = (&series[start], &series[end]);
    let drop = a.l - b.l;
    if !(b.l <= delta * a.l) || drop == 0.0 {
        return Err(Error::WindowPrecondition(format!(
            "L(T2) = {:e} is not below {delta} L(T1) = {:e}",
            b.l,
            delta * a.l
        )));
    }
    let integral_low = trapezoid(rows, |r| r.dl_minus_dt.abs());
    let integral_high = trapezoid(rows, |r| r.dl_plus_dt.abs());
    let integral_total = trapezoid(rows, |r| r.dl_dt.abs());
    if !(integral_total > 0.0) {
        return Err(Error::WindowPrecondition("rate integral vanishes".into()));
    }
    Ok(WindowDiagnostics {
        start,
        end,
        t1: a.t,
        t2: b.t,
        eta: a.eta,
        integral_low,
        integral_high,
        integral_total,
        ratio_low: integral_low / integral_total,
        ratio_high: integral_high / integral_total,
        quotient_low: (a.l_minus - b.l_minus).abs() / drop.abs(),
        quotient_high: (a.l_plus - b.l_plus).abs() / drop.abs(),
        delta,
    })
}

/// Windows sharing `T1 = times[0]` whose ends are the first checkpoints
/// with `L <= 2^-k L(T1)`, `k = 1..=levels`; stops at the first level never
/// reached.
pub fn nested_windows(times: &[f64], values: &[f64], levels: u32) -> Vec<HalfLifeWindow> {
    assert_eq!(times.len(), values.len());
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    let l0 = values[0];
    let mut from = 1;
    for k in 1..=levels {
        let threshold = l0 * 0.5f64.powi(k as i32);
        match (from..values.len()).find(|&j| values[j] <= threshold) {
            Some(end) => {
                out.push(HalfLifeWindow {
                    start: 0,
                    end,
                    t1: times[0],
                    t2: times[end],
                });
                from = end;
            }
            None => break,
        }
    }
    out
}

/// Share of rows with `dL^-/dt <= DISSIPATION_TOLERANCE |dL/dt|`; zero for
/// an empty series.
pub fn dissipation_check(series: &[DiagnosticsRow]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let ok = series
        .iter()
        .filter(|r| r.dl_minus_dt <= DISSIPATION_TOLERANCE * r.dl_dt.abs())
        .count();
    ok as f64 / series.len() as f64
}
