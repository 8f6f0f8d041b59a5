use serde::{Deserialize, Serialize};

use super::BumpFunction;
use crate::error::{Error, Result};
use crate::spectral::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityKind {
    /// Constant on `[a, b]`, zero elsewhere.
    UniformOn { a: f64, b: f64 },
    /// Proportional to the bump `chi`.
    TruncatedConstant,
}

/// Population density `rho`, normalized so that its rectangle-rule integral
/// over a given grid is one.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationDensity {
    kind: DensityKind,
    chi: BumpFunction,
    scale: f64,
}

impl PopulationDensity {
    pub fn normalized(kind: DensityKind, chi: BumpFunction, grid: &Grid) -> Result<Self> {
        if let DensityKind::UniformOn { a, b } = kind {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "uniform density needs a < b, got [{a}, {b}]"
                )));
            }
        }
        let mut density = PopulationDensity {
            kind,
            chi,
            scale: 1.0,
        };
        let mass: f64 = grid.nodes().map(|x| density.eval(x)).sum::<f64>() * grid.dx();
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument(
                "density has no mass on the grid".into(),
            ));
        }
        density.scale = 1.0 / mass;
        Ok(density)
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn eval(&self, x: f64) -> f64 {
        let raw = match self.kind {
            DensityKind::UniformOn { a, b } => {
                if x >= a && x <= b {
                    1.0
                } else {
                    0.0
                }
            }
            DensityKind::TruncatedConstant => self.chi.eval(x),
        };
        raw * self.scale
    }

    pub fn sqrt(&self, x: f64) -> f64 {
        self.eval(x).sqrt()
    }

    /// `||rho||_inf`; both kinds peak at their constant level.
    pub fn sup(&self) -> f64 {
        self.scale
    }

    /// Whether `sqrt(rho)` is as smooth as the bump (only for the
    /// chi-weighted kind; the uniform kind jumps at its endpoints).
    pub fn sqrt_is_smooth(&self) -> bool {
        matches!(self.kind, DensityKind::TruncatedConstant)
    }
}
