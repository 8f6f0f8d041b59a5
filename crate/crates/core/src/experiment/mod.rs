//! Seeded experiments: configuration, frozen presets, training runs,
//! diagnostics, artifact bundles and sweeps.

mod config;
mod report;
mod sweep;

pub use config::{
    sweep_seed, BumpConfig, DensityConfig, DiagnosticsConfig, EtaConfig, ExperimentConfig, FlowSection, GridConfig,
    SampleConfig, Spacing, SCHEMA_VERSION,
};
pub use report::{
    summarize, validate_assumptions, AssumptionItem, AssumptionReport, BracketReport, CheckStatus, DissipationReport,
    FitReport, NestedReport, PropertyCheck, Summary, WindowReport, DISSIPATION_MIN, HIGH_PEAK_MIN, LOW_PEAK_MAX,
    PYTHAGOREAN_TOL, R2_MIN, SLOPE_MAX, SPEARMAN_MAX,
};
pub use sweep::{sweep, write_sweep_csv, SweepAxis, SweepRow, SWEEP_COLUMNS};

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::diag::{default_etas, write_csv, DiagContext, DiagnosticsTable};
use crate::error::{Error, Result};
use crate::flow::{integrate, read_trajectory, write_trajectory, TrajectoryHeader, TrajectoryRecord};
use crate::grad::{LossData, LossObjective};
use crate::nnet::{PopulationDensity, Theta};

/// A named, frozen configuration shipped with the library.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "smoke",
        description: "1-8-1 tanh, three tones, 200 Euler steps",
        source: include_str!("../../presets/smoke.toml"),
    },
    Preset {
        name: "three-tone-desk",
        description: "tanh 1-40-40-1, tones j = 1, 3, 10, MSE, Euler flow",
        source: include_str!("../../presets/three-tone-desk.toml"),
    },
    Preset {
        name: "three-tone-p4-desk",
        description: "tanh 1-64-64-64-64-1, tones j = 1, 3, 10, |z|^4 loss, Adam 1e-3",
        source: include_str!("../../presets/three-tone-p4-desk.toml"),
    },
    Preset {
        name: "fig1-desk",
        description: "tanh 1-200-50-1, 500-term multitone, Adam 2e-5, MSE",
        source: include_str!("../../presets/fig1-desk.toml"),
    },
    Preset {
        name: "fig2-desk",
        description: "tanh 1-64-64-64-64-1, 500-term multitone, Adam 2e-5, |z|^4 loss",
        source: include_str!("../../presets/fig2-desk.toml"),
    },
    Preset {
        name: "fig2-full",
        description: "tanh 1-500-500-500-500-1, 500-term multitone, Adam 2e-5, |z|^4 loss",
        source: include_str!("../../presets/fig2-full.toml"),
    },
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let p = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?;
    ExperimentConfig::from_toml(p.source)
}

/// Everything a run needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ExperimentConfig,
    pub theta0: Theta,
    pub data: LossData,
    pub density: Option<PopulationDensity>,
}

impl Problem {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let chi = config.bump_function()?;
        let grid = config.grid()?;
        let density = config
            .density
            .density_kind()
            .map(|kind| PopulationDensity::normalized(kind, chi, &grid))
            .transpose()?;
        let data = match &density {
            None => LossData::empirical(&config.sample_points(), &config.target, &chi)?,
            Some(d) => LossData::quadrature(&grid, d, &config.target, &chi)?,
        };
        Ok(Problem {
            config: config.clone(),
            theta0: Theta::init_gaussian(&config.network, config.seed),
            data,
            density,
        })
    }

    pub fn objective(&self) -> Result<LossObjective> {
        LossObjective::new(self.config.network.clone(), self.config.loss, self.data.clone())
    }

    pub fn context(&self) -> Result<DiagContext> {
        let weighted = self.config.weighted_residual();
        DiagContext::new(
            self.config.network.clone(),
            self.config.grid()?,
            &self.config.target,
            &self.config.bump_function()?,
            if weighted { self.density.as_ref() } else { None },
        )
    }

    /// Configured cutoffs, or the detected peaks plus the log sweep.
    pub fn etas(&self, ctx: &DiagContext) -> Vec<f64> {
        match &self.config.eta.values {
            Some(v) => v.clone(),
            None => default_etas(ctx.grid(), ctx.peaks()),
        }
    }

    pub fn train(&self) -> Result<TrajectoryRecord> {
        let obj = self.objective()?;
        integrate(&obj, self.theta0.as_slice(), &self.config.flow_config())
    }
}

/// A finished run: trajectory, diagnostics and summary.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub record: TrajectoryRecord,
    pub context: DiagContext,
    pub table: DiagnosticsTable,
    pub summary: Summary,
}

/// Diagnostics and summary for an existing trajectory.
pub fn analyze(config: &ExperimentConfig, record: TrajectoryRecord) -> Result<RunOutput> {
    let problem = Problem::build(config)?;
    let ctx = problem.context()?;
    let etas = problem.etas(&ctx);
    let table = ctx.diagnose(&record.checkpoints, &etas)?;
    let summary = summarize(config, &record, &ctx, &table)?;
    Ok(RunOutput {
        config: config.clone(),
        record,
        context: ctx,
        table,
        summary,
    })
}

/// Trains and analyzes.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let problem = Problem::build(config)?;
    let record = problem.train()?;
    log::info!(
        "trained {} for {} steps: loss {:.6e} -> {:.6e}",
        config.network.describe(),
        config.flow.steps,
        record.checkpoints[0].loss,
        record.last().loss
    );
    analyze(config, record)
}

pub const TRAJECTORY_FILE: &str = "trajectory.fpt";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SPECTRUM_FILE: &str = "target_spectrum.tsv";
pub const CONFIG_FILE: &str = "config.toml";

fn header_for(out: &RunOutput) -> Result<TrajectoryHeader> {
    let mut header = TrajectoryHeader::new(out.config.network.clone(), out.config.loss, &out.record);
    header.extra = serde_json::json!({
        "config": serde_json::to_value(&out.config).map_err(|e| Error::Format(e.to_string()))?,
    });
    Ok(header)
}

/// Writes the trajectory, diagnostics CSV, summary JSON, target spectrum
/// and effective config into `dir`.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let f = BufWriter::new(fs::File::create(dir.join(TRAJECTORY_FILE))?);
    write_trajectory(f, &header_for(out)?, &out.record)?;
    write_diagnostics(out, dir)?;
    fs::write(dir.join(CONFIG_FILE), out.config.to_toml())?;
    Ok(())
}

/// Rewrites only the derived files (diagnostics, summary, spectrum).
pub fn write_diagnostics(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&out.table, BufWriter::new(fs::File::create(dir.join(DIAGNOSTICS_FILE))?))?;
    let summary = serde_json::to_string_pretty(&out.summary).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(SUMMARY_FILE), summary + "\n")?;
    out.context
        .target_spectrum()
        .write_table(BufWriter::new(fs::File::create(dir.join(SPECTRUM_FILE))?))?;
    Ok(())
}

/// Reads a stored trajectory and the config embedded in its header.
pub fn load_trajectory(path: &Path) -> Result<(ExperimentConfig, TrajectoryRecord)> {
    let f = std::io::BufReader::new(fs::File::open(path)?);
    let (header, record) = read_trajectory(f)?;
    let config: ExperimentConfig = serde_json::from_value(header.extra["config"].clone())
        .map_err(|e| Error::Format(format!("trajectory header carries no usable config: {e}")))?;
    if config.network != header.spec || config.loss != header.loss {
        return Err(Error::Format("header spec disagrees with embedded config".into()));
    }
    Ok((config, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for p in PRESETS {
            let c = preset(p.name).unwrap();
            assert_eq!(c.preset.as_deref(), Some(p.name));
            Problem::build(&c).unwrap();
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn reference_presets_match_their_descriptions() {
        let fig1 = preset("fig1-desk").unwrap();
        assert_eq!(fig1.network.widths(), &[1, 200, 50, 1]);
        assert_eq!(fig1.samples.count, 300);
        assert_eq!(fig1.flow.step, 2e-5);
        assert_eq!(fig1.samples.interval, [-3.14, 3.14]);
        let fig2 = preset("fig2-full").unwrap();
        assert_eq!(fig2.network.widths(), &[1, 500, 500, 500, 500, 1]);
        assert_eq!(fig2.loss, crate::grad::LossKind::Power { p: 4.0 });
        let desk = preset("fig2-desk").unwrap();
        assert_eq!(desk.network.depth(), fig2.network.depth());
    }

    #[test]
    fn smoke_run_writes_replayable_artifacts() {
        let config = preset("smoke").unwrap();
        let out = execute(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_artifacts(&out, dir.path()).unwrap();
        for f in [TRAJECTORY_FILE, DIAGNOSTICS_FILE, SUMMARY_FILE, SPECTRUM_FILE, CONFIG_FILE] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let (cfg, record) = load_trajectory(&dir.path().join(TRAJECTORY_FILE)).unwrap();
        assert_eq!(cfg, config);
        assert_eq!(record, out.record);
        let again = analyze(&cfg, record).unwrap();
        assert_eq!(again.table, out.table);
    }
}
