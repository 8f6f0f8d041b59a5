//! Uniform grids, the discrete Fourier transform with a physical frequency
//! axis, and frequency-band bookkeeping.
//!
//! Frequencies are in cycles per unit length: the transform approximates
//! `g^(xi) = int g(x) exp(-2 pi i xi x) dx` by
//! `dx * sum_j g(x_j) exp(-2 pi i xi_k x_j)` at `xi_k = k / (b - a)`.

mod band;
mod fft;
mod spectrum;

pub use band::{
    band_split, japanese_bracket, japanese_bracket_norm, residual_energy, top_octave_fraction,
    BandMask, BandSplit, MAX_BRACKET_ORDER,
};
pub use fft::FftPlan;
pub use spectrum::{dft, idft, idft_real, DftPlan, Spectrum};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `m` nodes `x_j = a + j dx` on `[a, b)`, `dx = (b - a) / m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("need a < b, got [{a}, {b}]")));
        }
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!("M must be even and >= 2, got {m}")));
        }
        Ok(Grid { a, b, m })
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.m as f64
    }

    /// Frequency spacing `1 / (b - a)`.
    pub fn dxi(&self) -> f64 {
        1.0 / self.length()
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.m).map(move |j| self.node(j))
    }

    /// Signed bin numbers `-m/2 .. m/2 - 1` in spectrum order.
    pub fn bins(&self) -> impl DoubleEndedIterator<Item = i64> + Clone {
        let half = (self.m / 2) as i64;
        -half..half
    }

    pub fn frequency(&self, k: i64) -> f64 {
        k as f64 / self.length()
    }

    pub fn nyquist(&self) -> f64 {
        self.frequency((self.m / 2) as i64)
    }

    /// Spectrum position of bin `k`.
    pub fn bin_index(&self, k: i64) -> Option<usize> {
        let half = (self.m / 2) as i64;
        (-half..half).contains(&k).then(|| (k + half) as usize)
    }

    /// Same origin, `factor` times the length and node count.
    pub fn padded(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("padding factor must be >= 1".into()));
        }
        Grid::new(self.a, self.a + factor as f64 * self.length(), self.m * factor)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Real samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sampled field has non-finite values".into()));
        }
        Ok(SampledField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        SampledField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum |g|^2 dx`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()
    }

    /// Extends with zeros to the right; finer frequency spacing, same Nyquist.
    pub fn zero_pad(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.padded(factor)?;
        let mut values = self.values.clone();
        values.resize(grid.len(), 0.0);
        Ok(SampledField { grid, values })
    }
}
