use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::diag::{
    dissipation_check, eta_decay_fit, nested_windows, spearman, window_ratios, DecayFit, DiagContext,
    DiagnosticsTable, Peak,
};
use crate::error::Result;
use crate::flow::{half_life_windows_with_ratio, HalfLifeWindow, Integrator, TrajectoryRecord, DIVERGENCE_GUARD};
use crate::grad::LossKind;
use crate::nnet::{Activation, PopulationDensity, Smoothness};
use crate::spectral::top_octave_fraction;

/// Lowest-peak relative error required at the end of the first window.
pub const LOW_PEAK_MAX: f64 = 0.3;
/// Highest-peak relative error required throughout the first window.
pub const HIGH_PEAK_MIN: f64 = 0.8;
/// Power-law slope of the high-band rate ratio against `eta`.
pub const SLOPE_MAX: f64 = -0.5;
pub const R2_MIN: f64 = 0.7;
pub const DISSIPATION_MIN: f64 = 0.95;
/// Rank correlation of window quotients against `eta`.
pub const SPEARMAN_MAX: f64 = -0.8;
pub const PYTHAGOREAN_TOL: f64 = 1e-10;
pub const RATE_IDENTITY_TOL: f64 = 1e-10;
/// Training loss below which a window counts as final stage.
pub const FINAL_STAGE_LOSS: f64 = 1e-6;

// parameter spectra cost N * M complex values
const BRACKET_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    NotApplicable,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
            CheckStatus::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl PropertyCheck {
    fn new(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        PropertyCheck {
            name: name.to_string(),
            status,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionItem {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `k = min` over activation, bump profile and target.
    pub smoothness: Smoothness,
    pub items: Vec<AssumptionItem>,
}

impl AssumptionReport {
    pub fn item(&self, name: &str) -> Option<&AssumptionItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.status != CheckStatus::Fail)
    }
}

/// Per-assumption status of a config; never fails.
pub fn validate_assumptions(config: &ExperimentConfig) -> AssumptionReport {
    let mut items = Vec::new();
    let mut push = |name: &str, status, detail: String| {
        items.push(AssumptionItem {
            name: name.to_string(),
            status,
            detail,
        })
    };

    let act = config.network.activation().smoothness();
    let bump = config.bump.profile.smoothness();
    let target = config.target.smoothness();
    let k = act.min(bump).min(target);
    push(
        "smoothness",
        CheckStatus::from_bool(k.at_least(1)),
        format!(
            "activation {} k={act}, bump {} k={bump}, target k={target}: k={k}",
            config.network.activation().name(),
            config.bump.profile.name()
        ),
    );

    match config.density.density_kind() {
        None => push(
            "density_bounded",
            CheckStatus::NotApplicable,
            "empirical measure: sample mean, no density".into(),
        ),
        Some(kind) => {
            let built = config
                .bump_function()
                .and_then(|chi| config.grid().map(|g| (chi, g)))
                .and_then(|(chi, g)| PopulationDensity::normalized(kind, chi, &g));
            match built {
                Ok(d) => {
                    let sup = d.sup();
                    push(
                        "density_bounded",
                        CheckStatus::from_bool(sup.is_finite()),
                        format!("sup rho = {sup:.6e} after grid normalization"),
                    )
                }
                Err(e) => push("density_bounded", CheckStatus::Fail, e.to_string()),
            }
        }
    }

    let r0 = config.diagnostics.sandwich_radius;
    let s = config.loss.sandwich_check(r0);
    let mut detail = format!(
        "{} on 1e-6 <= |z| <= {r0}: sup l'^2/l = {:.4e}, sup l/z^2 = {:.4e}, C = {:.4e}",
        config.loss.describe(),
        s.lower_ratio_sup,
        s.upper_ratio_sup,
        s.constant
    );
    if !s.bounded_near_zero {
        detail.push_str("; ratio unbounded as z -> 0");
    }
    if !s.twice_differentiable {
        detail.push_str("; not twice differentiable at 0");
    }
    push("loss_sandwich", CheckStatus::from_bool(s.passed), detail);

    match config.flow.bound {
        Some(r) => push("trajectory_bound", CheckStatus::Pass, format!("monitoring armed, R = {r}")),
        None => push(
            "trajectory_bound",
            CheckStatus::NotApplicable,
            format!("no bound configured; only the divergence guard {DIVERGENCE_GUARD:e} applies"),
        ),
    }

    AssumptionReport { smoothness: k, items }
}

/// Rate-ratio and output-ratio power-law fits at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub step: usize,
    pub t: f64,
    pub rate: Option<DecayFit>,
    pub output: Option<DecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub eta: f64,
    pub fraction: f64,
}

/// Difference quotients over one half-life window, one per `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: HalfLifeWindow,
    pub quotient_high: Vec<f64>,
    pub ratio_high: Vec<f64>,
    pub spearman: Option<f64>,
}

/// High-band quotient at one `eta` over windows sharing `T1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedReport {
    pub eta: f64,
    /// 1-based index of the peak that fixed `eta`.
    pub peak_number: usize,
    pub windows: Vec<HalfLifeWindow>,
    pub quotient_high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub order: u32,
    pub residual_initial: f64,
    pub residual_final: f64,
    /// Largest per-parameter norm at `t = 0`; absent above the size budget.
    pub parameter_max_initial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub preset: Option<String>,
    pub seed: u64,
    pub network: String,
    pub parameters: usize,
    pub loss: String,
    pub integrator: Integrator,
    pub steps: usize,
    pub checkpoints: usize,
    pub trivial: bool,
    pub loss_increases: usize,
    pub weighted_residual: bool,
    pub train_loss_initial: f64,
    pub train_loss_final: f64,
    pub residual_initial: f64,
    pub residual_final: f64,
    /// Share of the final residual energy in the top octave of the grid.
    pub top_octave_fraction: f64,
    pub peaks: Vec<Peak>,
    pub etas: Vec<f64>,
    pub half_life_windows: Vec<HalfLifeWindow>,
    pub windows: Vec<WindowReport>,
    pub nested: Option<NestedReport>,
    pub decay_fits: Vec<FitReport>,
    /// Fit of the window-averaged high ratio over the first window.
    pub first_window_fit: Option<DecayFit>,
    pub dissipation: Vec<DissipationReport>,
    pub brackets: Vec<BracketReport>,
    pub assumptions: AssumptionReport,
    pub checks: Vec<PropertyCheck>,
}

impl Summary {
    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn index_of_nearest(values: &[f64], x: f64) -> Option<usize> {
    (0..values.len()).min_by(|&a, &b| (values[a] - x).abs().total_cmp(&(values[b] - x).abs()))
}

/// Builds the summary, including every property check, for a diagnosed run.
pub fn summarize(
    config: &ExperimentConfig,
    record: &TrajectoryRecord,
    ctx: &DiagContext,
    table: &DiagnosticsTable,
) -> Result<Summary> {
    let etas = table.etas().to_vec();
    let peaks = table.peaks().to_vec();
    let times = table.times();
    let residuals = table.residuals();
    let n_cp = table.checkpoints();
    let delta = config.diagnostics.delta;
    let series: Vec<_> = (0..etas.len()).map(|e| table.series(e)).collect();
    let mut checks = Vec::new();

    let windows_hl = half_life_windows_with_ratio(&times, &residuals, delta);

    // fits across the sweep at each checkpoint
    let decay_fits: Vec<FitReport> = (0..n_cp)
        .map(|c| {
            let rows = table.checkpoint(c);
            let rate: Vec<f64> = rows.iter().map(|r| r.ratio_high).collect();
            let out: Vec<f64> = rows.iter().map(|r| r.out_ratio_high).collect();
            FitReport {
                step: rows[0].step,
                t: rows[0].t,
                rate: eta_decay_fit(&etas, &rate),
                output: eta_decay_fit(&etas, &out),
            }
        })
        .collect();

    // initial stage: peak errors over the first window
    let first = windows_hl.first().copied();
    match (first, peaks.len()) {
        (None, _) => checks.push(PropertyCheck::new(
            "initial_stage_peaks",
            CheckStatus::Skipped,
            "the residual never fell to delta times its start",
        )),
        (Some(_), n) if n < 2 => checks.push(PropertyCheck::new(
            "initial_stage_peaks",
            CheckStatus::Skipped,
            format!("needs two target peaks, found {n}"),
        )),
        (Some(w), n) => {
            let low_end = table.checkpoint(w.end)[0].peak_errors[0];
            let high_min = (w.start..=w.end)
                .map(|c| table.checkpoint(c)[0].peak_errors[n - 1])
                .fold(f64::INFINITY, f64::min);
            let ok = low_end < LOW_PEAK_MAX && high_min > HIGH_PEAK_MIN;
            checks.push(PropertyCheck::new(
                "initial_stage_peaks",
                CheckStatus::from_bool(ok),
                format!(
                    "window t = [{:.4}, {:.4}]: lowest-peak error {low_end:.4} at T2 (need < {LOW_PEAK_MAX}), \
                     highest-peak error min {high_min:.4} (need > {HIGH_PEAK_MIN})",
                    w.t1, w.t2
                ),
            ));
        }
    }

    // quotients and averaged ratios per window
    let mut windows = Vec::new();
    for w in &windows_hl {
        let mut quotient_high = Vec::with_capacity(etas.len());
        let mut ratio_high = Vec::with_capacity(etas.len());
        for s in &series {
            let d = window_ratios(s, w.start, w.end, delta)?;
            quotient_high.push(d.quotient_high);
            ratio_high.push(d.ratio_high);
        }
        let rho = spearman(&etas, &quotient_high);
        windows.push(WindowReport {
            window: *w,
            quotient_high,
            ratio_high,
            spearman: rho,
        });
    }

    // the window-averaged ratio; instantaneous fits are reported alongside
    let first_window_fit = windows.first().and_then(|w| eta_decay_fit(&etas, &w.ratio_high));
    let quadratic = config.loss == LossKind::Mse || config.loss == LossKind::Power { p: 2.0 };
    let relu_general = config.network.activation() == Activation::Relu && !quadratic;
    if relu_general {
        checks.push(PropertyCheck::new(
            "initial_stage_decay",
            CheckStatus::Skipped,
            "relu with a non-quadratic loss: the admissible order range is empty, slope assertions skipped",
        ));
    } else if let Some(w) = first {
        let instant = (w.start..=w.end)
            .filter(|&c| {
                decay_fits[c]
                    .rate
                    .is_some_and(|f| f.slope <= SLOPE_MAX && f.r_squared >= R2_MIN)
            })
            .count();
        let per_checkpoint = format!("instantaneous fits pass at {instant} of {} checkpoints", w.end - w.start + 1);
        let (ok, detail) = match first_window_fit {
            Some(f) => (
                f.slope <= SLOPE_MAX && f.r_squared >= R2_MIN,
                format!(
                    "window-averaged high ratio: slope {:.3} (need <= {SLOPE_MAX}), R^2 {:.3} (need >= {R2_MIN}); {per_checkpoint}",
                    f.slope, f.r_squared
                ),
            ),
            None => (false, format!("no fit (fewer than 3 positive ratios); {per_checkpoint}")),
        };
        checks.push(PropertyCheck::new("initial_stage_decay", CheckStatus::from_bool(ok), detail));
    } else {
        checks.push(PropertyCheck::new(
            "initial_stage_decay",
            CheckStatus::Skipped,
            "no half-life window",
        ));
    }

    // dissipation above the largest tone
    let top_freq = config
        .target
        .max_frequency()
        .or_else(|| peaks.last().map(|p| p.xi))
        .unwrap_or(0.0);
    let dissipation: Vec<DissipationReport> = etas
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > top_freq)
        .map(|(i, &eta)| DissipationReport {
            eta,
            fraction: dissipation_check(&series[i]),
        })
        .collect();
    if dissipation.is_empty() {
        checks.push(PropertyCheck::new(
            "dissipation",
            CheckStatus::Skipped,
            format!("no eta above the largest tone {top_freq:.4}"),
        ));
    } else {
        let min = dissipation.iter().map(|d| d.fraction).fold(f64::INFINITY, f64::min);
        let velocity = if config.flow.integrator.is_gradient_flow() {
            ""
        } else {
            " (velocity from finite differences)"
        };
        checks.push(PropertyCheck::new(
            "dissipation",
            CheckStatus::from_bool(min >= DISSIPATION_MIN),
            format!(
                "{} cutoffs above {top_freq:.4}: min fraction {min:.4} (need >= {DISSIPATION_MIN}){velocity}",
                dissipation.len()
            ),
        ));
    }

    if windows.is_empty() {
        checks.push(PropertyCheck::new(
            "intermediate_spearman",
            CheckStatus::Skipped,
            "no half-life window",
        ));
    } else {
        let rhos: Vec<f64> = windows.iter().map(|w| w.spearman.unwrap_or(f64::NAN)).collect();
        let ok = rhos.iter().all(|r| *r <= SPEARMAN_MAX);
        checks.push(PropertyCheck::new(
            "intermediate_spearman",
            CheckStatus::from_bool(ok),
            format!("{} windows, Spearman {} (need <= {SPEARMAN_MAX})", rhos.len(), fmt_list(&rhos)),
        ));
    }

    // quotient at the 4th peak against window length
    let nested = if peaks.is_empty() {
        None
    } else {
        let peak_number = peaks.len().min(4);
        let xi = peaks[peak_number - 1].xi;
        let e = index_of_nearest(&etas, xi).expect("nonempty sweep");
        let mut ws = nested_windows(&times, &residuals, config.diagnostics.nested_levels);
        ws.dedup_by_key(|w| w.end);
        let mut quotient_high = Vec::new();
        for w in &ws {
            quotient_high.push(window_ratios(&series[e], w.start, w.end, delta.max(0.5))?.quotient_high);
        }
        Some(NestedReport {
            eta: etas[e],
            peak_number,
            windows: ws,
            quotient_high,
        })
    };
    match &nested {
        Some(n) if n.windows.len() >= 2 => {
            let ok = n.quotient_high.windows(2).all(|q| q[1] >= q[0]);
            checks.push(PropertyCheck::new(
                "window_length",
                CheckStatus::from_bool(ok),
                format!(
                    "eta {:.4} (peak {}): quotients {} over T2 = {}",
                    n.eta,
                    n.peak_number,
                    fmt_sci(&n.quotient_high),
                    fmt_list(&n.windows.iter().map(|w| w.t2).collect::<Vec<_>>())
                ),
            ));
        }
        _ => checks.push(PropertyCheck::new(
            "window_length",
            CheckStatus::Skipped,
            "fewer than two distinct nested windows",
        )),
    }

    let clean: Vec<_> = table.rows().iter().filter(|r| r.flags.is_clean()).collect();
    let split_dev = clean
        .iter()
        .map(|r| (r.out_ratio_low.powi(2) + r.out_ratio_high.powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(PropertyCheck::new(
        "output_split",
        CheckStatus::from_bool(!clean.is_empty() && split_dev <= PYTHAGOREAN_TOL),
        format!(
            "{} clean rows of {}: max |low^2 + high^2 - 1| = {split_dev:.3e}",
            clean.len(),
            table.rows().len()
        ),
    ));

    if config.flow.integrator.is_gradient_flow() {
        let worst = record
            .checkpoints
            .iter()
            .filter(|c| c.grad_norm() > 0.0)
            .map(|c| {
                let g2: f64 = c.grad.iter().map(|g| g * g).sum();
                let dot: f64 = c.grad.iter().zip(&c.dtheta).map(|(g, d)| g * d).sum();
                (dot + g2).abs() / g2
            })
            .fold(0.0, f64::max);
        checks.push(PropertyCheck::new(
            "rate_identity",
            CheckStatus::from_bool(worst <= RATE_IDENTITY_TOL),
            format!("max relative |grad . dtheta/dt + |grad|^2| = {worst:.3e}"),
        ));
    } else {
        checks.push(PropertyCheck::new(
            "rate_identity",
            CheckStatus::NotApplicable,
            "adam velocity is a finite difference",
        ));
    }

    // final stage, with the loss threshold standing in for convergence
    let final_windows: Vec<&WindowReport> = windows
        .iter()
        .filter(|w| record.checkpoints[w.window.start].loss <= FINAL_STAGE_LOSS)
        .collect();
    if final_windows.is_empty() {
        checks.push(PropertyCheck::new(
            "final_stage",
            CheckStatus::Skipped,
            format!("training loss never reached {FINAL_STAGE_LOSS:e} at a window start"),
        ));
    } else {
        let rhos: Vec<f64> = final_windows.iter().map(|w| w.spearman.unwrap_or(f64::NAN)).collect();
        checks.push(PropertyCheck::new(
            "final_stage",
            CheckStatus::from_bool(rhos.iter().all(|r| *r <= SPEARMAN_MAX)),
            format!("{} windows, Spearman {}", rhos.len(), fmt_list(&rhos)),
        ));
    }

    let first_cp = &record.checkpoints[0];
    let last_cp = record.last();
    let final_probe = ctx.probe(last_cp)?;
    let n_params = config.network.size();
    let param_ok = n_params.saturating_mul(ctx.grid().len()) <= BRACKET_BUDGET;
    let param_norms: Option<Vec<Vec<f64>>> = if param_ok {
        Some(
            (0..=config.diagnostics.bracket_order)
                .map(|m| ctx.parameter_bracket_norms(&first_cp.theta, m, 2))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mut brackets = Vec::new();
    for m in 0..=config.diagnostics.bracket_order {
        brackets.push(BracketReport {
            order: m,
            residual_initial: ctx.residual_bracket_norm(&first_cp.theta, m, 2)?,
            residual_final: ctx.residual_bracket_norm(&last_cp.theta, m, 2)?,
            parameter_max_initial: param_norms
                .as_ref()
                .map(|v| v[m as usize].iter().cloned().fold(0.0, f64::max)),
        });
    }

    Ok(Summary {
        preset: config.preset.clone(),
        seed: config.seed,
        network: config.network.describe(),
        parameters: n_params,
        loss: config.loss.describe(),
        integrator: config.flow.integrator,
        steps: config.flow.steps,
        checkpoints: n_cp,
        trivial: record.trivial,
        loss_increases: record.loss_increases,
        weighted_residual: ctx.is_weighted(),
        train_loss_initial: first_cp.loss,
        train_loss_final: last_cp.loss,
        residual_initial: residuals[0],
        residual_final: *residuals.last().expect("checkpoints"),
        top_octave_fraction: top_octave_fraction(ctx.grid(), &final_probe.q),
        peaks,
        etas,
        half_life_windows: windows_hl,
        windows,
        nested,
        decay_fits,
        first_window_fit,
        dissipation,
        brackets,
        assumptions: validate_assumptions(config),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::preset;
    use crate::nnet::BumpProfile;

    #[test]
    fn relu_quintic_mse_passes_with_k_one() {
        let mut c = preset("smoke").unwrap();
        c.network = crate::nnet::NetworkSpec::new(vec![1, 8, 1], Activation::Relu).unwrap();
        c.bump.profile = BumpProfile::SmoothstepQuintic;
        let r = validate_assumptions(&c);
        assert_eq!(r.smoothness, Smoothness::Finite(1));
        assert_eq!(r.item("smoothness").unwrap().status, CheckStatus::Pass);
        assert_eq!(r.item("loss_sandwich").unwrap().status, CheckStatus::Pass);
        assert!(r.all_pass());
    }

    #[test]
    fn power_one_and_a_half_fails_the_sandwich() {
        let mut c = preset("smoke").unwrap();
        c.loss = LossKind::Power { p: 1.5 };
        let r = validate_assumptions(&c);
        let item = r.item("loss_sandwich").unwrap();
        assert_eq!(item.status, CheckStatus::Fail);
        assert!(item.detail.contains("unbounded"), "{}", item.detail);
        c.loss = LossKind::Power { p: 4.0 };
        assert_eq!(validate_assumptions(&c).item("loss_sandwich").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn tanh_smooth_exp_is_infinitely_smooth() {
        let mut c = preset("smoke").unwrap();
        c.bump.profile = BumpProfile::SmoothExp;
        let r = validate_assumptions(&c);
        assert_eq!(r.smoothness, Smoothness::Infinite);
        assert!(r.item("smoothness").unwrap().detail.ends_with("k=inf"));
    }

    #[test]
    fn density_and_bound_items_follow_the_config() {
        let mut c = preset("smoke").unwrap();
        let r = validate_assumptions(&c);
        assert_eq!(r.item("density_bounded").unwrap().status, CheckStatus::NotApplicable);
        assert_eq!(r.item("trajectory_bound").unwrap().status, CheckStatus::NotApplicable);
        c.density = super::super::DensityConfig::TruncatedConstant;
        c.flow.bound = Some(50.0);
        let r = validate_assumptions(&c);
        assert_eq!(r.item("density_bounded").unwrap().status, CheckStatus::Pass);
        assert!(r.item("trajectory_bound").unwrap().detail.contains("R = 50"));
    }

    #[test]
    fn nearest_index() {
        assert_eq!(index_of_nearest(&[0.1, 0.5, 2.0], 0.6), Some(1));
        assert_eq!(index_of_nearest(&[], 0.6), None);
    }
}
