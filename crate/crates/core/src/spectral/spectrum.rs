use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use super::{FftPlan, Grid, SampledField};
use crate::error::{Error, Result};

/// Coefficients `g^(xi_k)` for `k = -M/2 .. M/2 - 1`, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn dxi(&self) -> f64 {
        self.grid.dxi()
    }

    pub fn at(&self, k: i64) -> Option<Complex64> {
        self.grid.bin_index(k).map(|i| self.coeffs[i])
    }

    /// `(k, xi_k, coefficient)` in spectrum order.
    pub fn bins(&self) -> impl Iterator<Item = (i64, f64, Complex64)> + '_ {
        self.grid
            .bins()
            .zip(&self.coeffs)
            .map(|(k, c)| (k, self.grid.frequency(k), *c))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }

    /// `sum |g^|^2 dxi`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dxi()
    }

    /// Largest `|g^(-xi) - conj(g^(xi))|` over bins with both signs present.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let half = (self.grid.len() / 2) as i64;
        (1..half)
            .map(|k| (self.at(-k).unwrap() - self.at(k).unwrap().conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Text table `k xi re im abs`, 17 significant digits.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k\txi\tre\tim\tabs")?;
        for (k, xi, c) in self.bins() {
            writeln!(
                out,
                "{k}\t{xi:.16e}\t{:.16e}\t{:.16e}\t{:.16e}",
                c.re,
                c.im,
                c.norm()
            )?;
        }
        Ok(())
    }
}

/// Reusable forward/inverse transform for one grid.
#[derive(Debug, Clone)]
pub struct DftPlan {
    grid: Grid,
    fft: FftPlan,
    /// `dx exp(-2 pi i xi_k a)` in spectrum order.
    phase: Vec<Complex64>,
}

impl DftPlan {
    pub fn new(grid: Grid) -> Self {
        let dx = grid.dx();
        let a = grid.start();
        let length = grid.length();
        let phase = grid
            .bins()
            .map(|k| {
                // reduce k a / L mod 1 before scaling to keep the angle small
                let turns = (k as f64 * a / length).rem_euclid(1.0);
                Complex64::from_polar(dx, -TAU * turns)
            })
            .collect();
        DftPlan {
            grid,
            fft: FftPlan::new(grid.len()),
            phase,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Forward transform of real samples into `out` (spectrum order).
    pub fn forward_into(&self, values: &[f64], buf: &mut Vec<Complex64>, out: &mut Vec<Complex64>) -> Result<()> {
        let m = self.grid.len();
        if values.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: values.len(),
            });
        }
        buf.clear();
        buf.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
        self.fft.process(buf, false);
        out.clear();
        out.resize(m, Complex64::new(0.0, 0.0));
        let half = m / 2;
        for (n, c) in buf.iter().enumerate() {
            // standard index n holds bin k = n (n < M/2) or n - M
            let idx = if n < half { n + half } else { n - half };
            out[idx] = c * self.phase[idx];
        }
        Ok(())
    }

    pub fn forward(&self, field: &SampledField) -> Result<Spectrum> {
        if !field.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("field and plan grids differ".into()));
        }
        self.forward_values(field.values())
    }

    pub fn forward_values(&self, values: &[f64]) -> Result<Spectrum> {
        let mut buf = Vec::with_capacity(values.len());
        let mut out = Vec::with_capacity(values.len());
        self.forward_into(values, &mut buf, &mut out)?;
        Ok(Spectrum {
            grid: self.grid,
            coeffs: out,
        })
    }

    /// `g(x_j) = sum_k g^(xi_k) exp(2 pi i xi_k x_j) dxi`.
    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Vec<Complex64>> {
        if !spectrum.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("spectrum and plan grids differ".into()));
        }
        let m = self.grid.len();
        let half = m / 2;
        let scale = self.grid.dxi();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (idx, c) in spectrum.coeffs.iter().enumerate() {
            let n = if idx >= half { idx - half } else { idx + half };
            // undo the dx and phase factors: phase / dx = exp(-2 pi i xi a)
            let unphase = (self.phase[idx] / self.grid.dx()).conj();
            buf[n] = c * unphase * scale;
        }
        self.fft.process(&mut buf, true);
        Ok(buf)
    }
}

pub fn dft(field: &SampledField) -> Spectrum {
    DftPlan::new(*field.grid())
        .forward(field)
        .expect("plan built from the field's own grid")
}

pub fn idft(spectrum: &Spectrum) -> Vec<Complex64> {
    DftPlan::new(*spectrum.grid())
        .inverse(spectrum)
        .expect("plan built from the spectrum's own grid")
}

/// Real part of the inverse transform.
pub fn idft_real(spectrum: &Spectrum) -> Result<SampledField> {
    let values = idft(spectrum).into_iter().map(|c| c.re).collect();
    SampledField::new(*spectrum.grid(), values)
}
