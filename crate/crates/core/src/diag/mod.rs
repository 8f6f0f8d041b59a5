//! Band diagnostics along a trajectory: residual energies below and above a
//! cutoff `eta`, their time derivatives, output-change band fractions,
//! window ratios and power-law fits in `eta`.

mod fit;
mod peaks;
mod table;
mod window;

pub use fit::{eta_decay_fit, spearman, DecayFit};
pub use peaks::{default_etas, detect_peaks, peak_relative_errors, Peak, PEAK_THRESHOLD};
pub use table::{write_csv, DiagnosticsRow, DiagnosticsTable, RowFlags};
pub use window::{dissipation_check, nested_windows, window_ratios, WindowDiagnostics, DISSIPATION_TOLERANCE};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::Checkpoint;
use crate::grad::GradWorkspace;
use crate::nnet::{BumpFunction, NetworkSpec, PopulationDensity, TargetFunction};
use crate::spectral::{japanese_bracket_norm, BandMask, DftPlan, Grid, Spectrum};

/// Guard `eps_g` on `|grad L|` and on the output-change norm.
pub const DEGENERATE_GUARD: f64 = 1e-12;

/// Everything fixed across checkpoints: grid, transform plan, sampling
/// weights and the target spectrum.
///
/// Fields are sampled as `g(x_j) w(x_j)` with `w = chi sqrt(rho)` for a
/// density-weighted residual and `w = chi` otherwise.
#[derive(Debug, Clone)]
pub struct DiagContext {
    spec: NetworkSpec,
    plan: DftPlan,
    weights: Vec<f64>,
    fhat: Spectrum,
    peaks: Vec<Peak>,
    weighted: bool,
}

impl DiagContext {
    pub fn new(
        spec: NetworkSpec,
        grid: Grid,
        target: &TargetFunction,
        chi: &BumpFunction,
        density: Option<&PopulationDensity>,
    ) -> Result<Self> {
        if spec.input_dim() != 1 {
            return Err(Error::InvalidSpec("band diagnostics are one-dimensional".into()));
        }
        let (lo, hi) = chi.outer();
        if lo < grid.start() || hi > grid.end() {
            return Err(Error::GridMismatch(format!(
                "grid [{}, {}) does not contain the bump support [{lo}, {hi}]",
                grid.start(),
                grid.end()
            )));
        }
        let weights: Vec<f64> = grid
            .nodes()
            .map(|x| chi.eval(x) * density.map_or(1.0, |d| d.sqrt(x)))
            .collect();
        let fvals: Vec<f64> = grid.nodes().zip(&weights).map(|(x, w)| target.eval(x) * w).collect();
        let plan = DftPlan::new(grid);
        let fhat = plan.forward_values(&fvals)?;
        let peaks = detect_peaks(&fhat, PEAK_THRESHOLD);
        Ok(DiagContext {
            spec,
            plan,
            weights,
            fhat,
            peaks,
            weighted: density.is_some(),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.plan.grid()
    }

    pub fn target_spectrum(&self) -> &Spectrum {
        &self.fhat
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    /// Whether the residual carries the `sqrt(rho)` weight.
    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn masks(&self, etas: &[f64]) -> Result<Vec<BandMask>> {
        etas.iter().map(|&eta| BandMask::new(self.grid(), eta)).collect()
    }

    /// Weighted samples of `h` on the grid.
    pub fn sample_output(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut ws = GradWorkspace::new(&self.spec);
        self.grid()
            .nodes()
            .zip(&self.weights)
            .map(|(x, &w)| Ok(if w == 0.0 { 0.0 } else { ws.forward(theta, &[x])? * w }))
            .collect()
    }

    pub fn output_spectrum(&self, theta: &[f64]) -> Result<Spectrum> {
        self.plan.forward_values(&self.sample_output(theta)?)
    }

    /// Per-bin quantities at one checkpoint.
    pub fn probe(&self, cp: &Checkpoint) -> Result<Probe> {
        let n = self.spec.size();
        for v in [&cp.theta, &cp.dtheta] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        let m = self.grid().len();
        let mut ws = GradWorkspace::new(&self.spec);
        let mut hvals = vec![0.0; m];
        let mut dvals = vec![0.0; m];
        for (j, x) in self.grid().nodes().enumerate() {
            let w = self.weights[j];
            if w == 0.0 {
                continue;
            }
            let (y, dy) = ws.forward_tangent(&cp.theta, &cp.dtheta, &[x])?;
            hvals[j] = y * w;
            dvals[j] = dy * w;
        }
        let mut buf = Vec::with_capacity(m);
        let mut hhat = Vec::with_capacity(m);
        let mut dhat = Vec::with_capacity(m);
        self.plan.forward_into(&hvals, &mut buf, &mut hhat)?;
        self.plan.forward_into(&dvals, &mut buf, &mut dhat)?;
        Ok(self.probe_from_spectra(cp, &hhat, &dhat))
    }

    fn probe_from_spectra(&self, cp: &Checkpoint, hhat: &[Complex64], dhat: &[Complex64]) -> Probe {
        let fhat = self.fhat.coeffs();
        let mut q = Vec::with_capacity(hhat.len());
        let mut rate = Vec::with_capacity(hhat.len());
        let mut out = Vec::with_capacity(hhat.len());
        for ((h, f), d) in hhat.iter().zip(fhat).zip(dhat) {
            let e = h - f;
            q.push(e.norm_sqr());
            rate.push(2.0 * (d * e.conj()).re);
            out.push(d.norm_sqr());
        }
        let peak_errors = self
            .peaks
            .iter()
            .map(|p| (hhat[p.index] - fhat[p.index]).norm() / p.magnitude)
            .collect();
        Probe {
            step: cp.step,
            t: cp.t,
            train_loss: cp.loss,
            grad_norm: cp.grad_norm(),
            dxi: self.grid().dxi(),
            q,
            rate,
            out,
            peak_errors,
        }
    }

    /// Diagnostics rows for every checkpoint and every `eta`, in checkpoint-major
    /// order. Checkpoints are processed in parallel; each row depends only on
    /// its own checkpoint.
    pub fn diagnose(&self, checkpoints: &[Checkpoint], etas: &[f64]) -> Result<DiagnosticsTable> {
        let masks = self.masks(etas)?;
        let rows: Vec<Vec<DiagnosticsRow>> = checkpoints
            .par_iter()
            .map(|cp| {
                let probe = self.probe(cp)?;
                masks.iter().map(|mask| probe.row(mask)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(DiagnosticsTable::new(etas.to_vec(), self.peaks.clone(), rows.into_iter().flatten().collect()))
    }

    /// `grad_theta h(x_j)` sampled on the grid, one field per parameter.
    pub fn parameter_fields(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.spec.size();
        let m = self.grid().len();
        let mut fields = vec![vec![0.0; m]; n];
        let mut ws = GradWorkspace::new(&self.spec);
        let mut g = vec![0.0; n];
        for (j, x) in self.grid().nodes().enumerate() {
            let w = self.weights[j];
            if w == 0.0 {
                continue;
            }
            ws.forward(theta, &[x])?;
            g.iter_mut().for_each(|v| *v = 0.0);
            ws.accumulate(theta, w, &mut g);
            for (field, gp) in fields.iter_mut().zip(&g) {
                field[j] = *gp;
            }
        }
        Ok(fields)
    }

    /// `grad_theta h^(xi)`, one transform per parameter.
    pub fn parameter_spectra(&self, theta: &[f64]) -> Result<Vec<Spectrum>> {
        let fields = self.parameter_fields(theta)?;
        let m = self.grid().len();
        let mut buf = Vec::with_capacity(m);
        fields
            .iter()
            .map(|field| {
                let mut out = Vec::with_capacity(m);
                self.plan.forward_into(field, &mut buf, &mut out)?;
                Spectrum::new(*self.grid(), out)
            })
            .collect()
    }

    /// `|| <xi>^m grad_theta h^ ||_{L^p}` per parameter.
    pub fn parameter_bracket_norms(&self, theta: &[f64], m: u32, p: u32) -> Result<Vec<f64>> {
        self.parameter_spectra(theta)?
            .iter()
            .map(|s| japanese_bracket_norm(self.grid(), &s.magnitudes(), m, p))
            .collect()
    }

    /// `|| <xi>^m (h^ - f^) ||_{L^p}` at `theta`.
    pub fn residual_bracket_norm(&self, theta: &[f64], m: u32, p: u32) -> Result<f64> {
        let hhat = self.output_spectrum(theta)?;
        let mags: Vec<f64> = hhat
            .coeffs()
            .iter()
            .zip(self.fhat.coeffs())
            .map(|(h, f)| (h - f).norm())
            .collect();
        japanese_bracket_norm(self.grid(), &mags, m, p)
    }
}

/// Per-bin residual energy `q`, loss rate `2 Re[dh^/dt conj(h^ - f^)]` and
/// output-change energy `|dh^/dt|^2` at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub step: usize,
    pub t: f64,
    pub train_loss: f64,
    pub grad_norm: f64,
    pub dxi: f64,
    pub q: Vec<f64>,
    pub rate: Vec<f64>,
    pub out: Vec<f64>,
    pub peak_errors: Vec<f64>,
}

impl Probe {
    /// `L = sum_k q_k dxi`.
    pub fn residual(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.dxi
    }

    /// Chain-rule `dL/dt`.
    pub fn residual_rate(&self) -> f64 {
        self.rate.iter().sum::<f64>() * self.dxi
    }

    pub fn row(&self, mask: &BandMask) -> Result<DiagnosticsRow> {
        let q = crate::spectral::band_split(&self.q, mask)?;
        let rate = crate::spectral::band_split(&self.rate, mask)?;
        let out = crate::spectral::band_split(&self.out, mask)?;
        let mut flags = RowFlags::default();
        let total_rate = rate.total();
        let (ratio_low, ratio_high) = if self.grad_norm <= DEGENERATE_GUARD {
            flags.degenerate_grad = true;
            (f64::NAN, f64::NAN)
        } else if total_rate == 0.0 {
            flags.zero_rate = true;
            (f64::NAN, f64::NAN)
        } else {
            (rate.low.abs() / total_rate.abs(), rate.high.abs() / total_rate.abs())
        };
        let out_total = out.total();
        let (out_low, out_high) = if out_total.sqrt() <= DEGENERATE_GUARD {
            flags.degenerate_output = true;
            (f64::NAN, f64::NAN)
        } else {
            ((out.low / out_total).sqrt(), (out.high / out_total).sqrt())
        };
        Ok(DiagnosticsRow {
            step: self.step,
            t: self.t,
            eta: mask.eta(),
            l: q.total(),
            l_minus: q.low,
            l_plus: q.high,
            dl_dt: total_rate,
            dl_minus_dt: rate.low,
            dl_plus_dt: rate.high,
            ratio_low,
            ratio_high,
            out_ratio_low: out_low,
            out_ratio_high: out_high,
            peak_errors: self.peak_errors.clone(),
            flags,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, FlowConfig, Integrator};
    use crate::grad::{LossData, LossKind, LossObjective};
    use crate::nnet::{Activation, BumpProfile, DensityKind, Theta};

    fn setup(weighted: bool) -> (DiagContext, LossObjective, Vec<f64>) {
        let spec = NetworkSpec::new(vec![1, 8, 1], Activation::Tanh).unwrap();
        let grid = Grid::new(-4.0, 4.0, 128).unwrap();
        let chi = BumpFunction::new((-2.5, 2.5), (-3.5, 3.5), BumpProfile::SmoothstepQuintic).unwrap();
        let target = TargetFunction::tones([(1.0, 1.0), (3.0, 1.0 / 3.0)]);
        let density = PopulationDensity::normalized(DensityKind::TruncatedConstant, chi, &grid).unwrap();
        let data = LossData::quadrature(&grid, &density, &target, &chi).unwrap();
        let obj = LossObjective::new(spec.clone(), LossKind::Mse, data).unwrap();
        let ctx = DiagContext::new(spec.clone(), grid, &target, &chi, weighted.then_some(&density)).unwrap();
        (ctx, obj, Theta::init_gaussian(&spec, 3).into_vec())
    }

    fn run(obj: &LossObjective, theta: &[f64], steps: usize, stride: usize) -> crate::flow::TrajectoryRecord {
        let cfg = FlowConfig {
            integrator: Integrator::GradientFlowEuler,
            step: 1e-3,
            steps,
            stride,
            seed: 3,
            bound: None,
        };
        integrate(obj, theta, &cfg).unwrap()
    }

    #[test]
    fn weighted_quadrature_rate_is_minus_grad_squared() {
        let (ctx, obj, theta) = setup(true);
        let rec = run(&obj, &theta, 20, 5);
        for cp in &rec.checkpoints {
            let probe = ctx.probe(cp).unwrap();
            let g2 = cp.grad_norm().powi(2);
            assert!((probe.residual_rate() + g2).abs() <= 1e-10 * g2, "{} vs {}", probe.residual_rate(), -g2);
            assert!((probe.residual() - cp.loss).abs() < 1e-10 * cp.loss);
        }
    }

    #[test]
    fn chain_rule_rate_matches_time_difference() {
        // 1-8-1 on M = 128: central difference of L in time vs the chain rule
        let (ctx, obj, theta) = setup(false);
        let rec = run(&obj, &theta, 400, 1);
        let probes: Vec<Probe> = [199, 200, 201].iter().map(|&i| ctx.probe(&rec.checkpoints[i]).unwrap()).collect();
        let dt = rec.config.step;
        let fd = (probes[2].residual() - probes[0].residual()) / (2.0 * dt);
        let chain = probes[1].residual_rate();
        assert!((fd - chain).abs() <= 0.02 * chain.abs(), "fd {fd} chain {chain}");
    }

    #[test]
    fn rows_are_additive_and_pythagorean() {
        let (ctx, obj, theta) = setup(false);
        let rec = run(&obj, &theta, 30, 10);
        let etas = [0.1, 0.3, 1.0, ctx.grid().nyquist()];
        let table = ctx.diagnose(&rec.checkpoints, &etas).unwrap();
        assert_eq!(table.rows().len(), rec.checkpoints.len() * etas.len());
        for row in table.rows() {
            assert!((row.dl_minus_dt + row.dl_plus_dt - row.dl_dt).abs() <= 1e-10 * row.dl_dt.abs());
            assert!((row.out_ratio_low.powi(2) + row.out_ratio_high.powi(2) - 1.0).abs() < 1e-10);
            assert!(row.ratio_low >= 0.0 && row.ratio_high >= 0.0);
            assert!(row.flags.is_clean());
        }
        for row in table.rows().iter().filter(|r| r.eta == ctx.grid().nyquist()) {
            assert_eq!(row.ratio_low, 1.0);
            assert_eq!(row.ratio_high, 0.0);
            assert_eq!(row.l_plus, 0.0);
        }
        // nested masks: monotone in eta
        for c in 0..rec.checkpoints.len() {
            let series = table.checkpoint(c);
            for pair in series.windows(2) {
                assert!(pair[0].l_minus <= pair[1].l_minus);
                assert!(pair[0].out_ratio_high >= pair[1].out_ratio_high);
            }
        }
    }

    #[test]
    fn jvp_spectrum_equals_parameter_sum() {
        let (ctx, obj, theta) = setup(true);
        let rec = run(&obj, &theta, 3, 3);
        let cp = rec.last();
        let spectra = ctx.parameter_spectra(&cp.theta).unwrap();
        let n = spectra.len();
        let m = ctx.grid().len();
        let mut summed = vec![Complex64::new(0.0, 0.0); m];
        for (s, d) in spectra.iter().zip(&cp.dtheta) {
            for (acc, c) in summed.iter_mut().zip(s.coeffs()) {
                *acc += c * d;
            }
        }
        let probe = ctx.probe(cp).unwrap();
        let scale = probe.out.iter().cloned().fold(0.0, f64::max).sqrt();
        for (s, o) in summed.iter().zip(&probe.out) {
            assert!((s.norm() - o.sqrt()).abs() < 1e-10 * scale);
        }
        assert_eq!(n, ctx.spec.size());
        let norms = ctx.parameter_bracket_norms(&cp.theta, 2, 2).unwrap();
        let plain = ctx.parameter_bracket_norms(&cp.theta, 0, 2).unwrap();
        assert!(norms.iter().zip(&plain).all(|(a, b)| a >= b));
    }

    #[test]
    fn single_low_tone_parameter_is_all_low() {
        // only the output bias moves: dh/dt = chi, whose spectrum sits near 0
        let (ctx, _, theta) = setup(false);
        let n = theta.len();
        let mut dtheta = vec![0.0; n];
        dtheta[n - 1] = 1.0;
        let cp = Checkpoint {
            step: 0,
            t: 0.0,
            loss: 1.0,
            theta: theta.clone(),
            grad: vec![1.0; n],
            dtheta,
        };
        let probe = ctx.probe(&cp).unwrap();
        let row = probe.row(&BandMask::new(ctx.grid(), 1.5).unwrap()).unwrap();
        assert!(row.out_ratio_low > 1.0 - 1e-5, "{}", row.out_ratio_low);
        let row = probe.row(&BandMask::new(ctx.grid(), ctx.grid().nyquist()).unwrap()).unwrap();
        assert_eq!(row.out_ratio_low, 1.0);
        assert_eq!(row.out_ratio_high, 0.0);
    }

    #[test]
    fn degenerate_rows_are_flagged() {
        let (ctx, _, theta) = setup(false);
        let n = theta.len();
        let cp = Checkpoint {
            step: 0,
            t: 0.0,
            loss: 1.0,
            theta,
            grad: vec![0.0; n],
            dtheta: vec![0.0; n],
        };
        let row = ctx.probe(&cp).unwrap().row(&BandMask::new(ctx.grid(), 0.5).unwrap()).unwrap();
        assert!(row.flags.degenerate_grad && row.flags.degenerate_output);
        assert!(row.ratio_low.is_nan() && row.out_ratio_low.is_nan());
        assert!(!row.flags.is_clean());
    }

    #[test]
    fn exact_fit_has_zero_peak_errors_and_untouched_is_one() {
        let (ctx, _, theta) = setup(false);
        assert!(ctx.peaks().len() >= 2);
        let fhat = ctx.target_spectrum();
        let idx: Vec<usize> = ctx.peaks().iter().map(|p| p.index).collect();
        assert!(peak_relative_errors(fhat, fhat, &idx).unwrap().iter().all(|&e| e == 0.0));
        let zero = Spectrum::new(*ctx.grid(), vec![Complex64::new(0.0, 0.0); ctx.grid().len()]).unwrap();
        assert!(peak_relative_errors(&zero, fhat, &idx).unwrap().iter().all(|&e| (e - 1.0).abs() < 1e-15));
        let _ = theta;
    }

    #[test]
    fn grid_must_hold_bump() {
        let spec = NetworkSpec::new(vec![1, 2, 1], Activation::Tanh).unwrap();
        let chi = BumpFunction::new((-2.5, 2.5), (-3.5, 3.5), BumpProfile::SmoothstepQuintic).unwrap();
        let grid = Grid::new(-3.0, 3.0, 64).unwrap();
        let target = TargetFunction::tones([(1.0, 1.0)]);
        assert!(matches!(
            DiagContext::new(spec, grid, &target, &chi, None),
            Err(Error::GridMismatch(_))
        ));
    }
}
