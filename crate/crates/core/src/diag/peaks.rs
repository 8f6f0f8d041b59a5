use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, Spectrum};

/// Peaks below this fraction of the largest `|f^|` are ignored.
pub const PEAK_THRESHOLD: f64 = 0.05;

/// A local maximum of `|f^|` at a nonnegative frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Position in spectrum order.
    pub index: usize,
    pub k: i64,
    pub xi: f64,
    pub magnitude: f64,
}

/// Local maxima of `|f^(xi_k)|` for `k >= 0` above `threshold * max |f^|`,
/// in increasing frequency.
pub fn detect_peaks(fhat: &Spectrum, threshold: f64) -> Vec<Peak> {
    let mags = fhat.magnitudes();
    let grid = fhat.grid();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    let half = grid.len() / 2;
    let mut peaks = Vec::new();
    for idx in half..grid.len() {
        let v = mags[idx];
        let left = mags[idx - 1];
        let right = mags.get(idx + 1).copied().unwrap_or(0.0);
        if v > left && v >= right && v >= threshold * top {
            let k = idx as i64 - half as i64;
            peaks.push(Peak {
                index: idx,
                k,
                xi: grid.frequency(k),
                magnitude: v,
            });
        }
    }
    peaks
}

/// `|h^ - f^| / |f^|` at the given spectrum positions.
pub fn peak_relative_errors(hhat: &Spectrum, fhat: &Spectrum, peaks: &[usize]) -> Result<Vec<f64>> {
    if !hhat.grid().same_as(fhat.grid()) {
        return Err(Error::GridMismatch("hypothesis and target spectra".into()));
    }
    let (h, f) = (hhat.coeffs(), fhat.coeffs());
    peaks
        .iter()
        .map(|&i| {
            let fi = *f.get(i).ok_or_else(|| Error::InvalidArgument(format!("peak position {i} out of range")))?;
            if fi.norm() == 0.0 {
                return Err(Error::ZeroPeak(i as i64 - (f.len() / 2) as i64));
            }
            Ok((h[i] - fi).norm() / fi.norm())
        })
        .collect()
}

/// Peak frequencies plus 8 log-spaced cutoffs from `dxi` to half the Nyquist
/// frequency, sorted with near-duplicates merged.
pub fn default_etas(grid: &Grid, peaks: &[Peak]) -> Vec<f64> {
    let lo = grid.dxi();
    let hi = grid.nyquist() / 2.0;
    let mut etas: Vec<f64> = peaks.iter().map(|p| p.xi).filter(|&xi| xi > 0.0).collect();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    let count = 8;
    for i in 0..count {
        let s = i as f64 / (count - 1) as f64;
        let eta = lo * (hi / lo).powf(s);
        // a peak frequency wins over a log-spaced point on top of it
        if !peaks.iter().any(|p| close(eta, p.xi)) {
            etas.push(eta);
        }
    }
    etas.sort_by(f64::total_cmp);
    etas.dedup_by(|a, b| close(*a, *b));
    etas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dft, SampledField};

    fn windowed_tones(freqs: &[(f64, f64)]) -> Spectrum {
        let grid = Grid::new(-8.0, 8.0, 512).unwrap();
        let field = SampledField::from_fn(grid, |x| {
            let w = if x.abs() < 6.0 { (std::f64::consts::PI * x / 12.0).cos().powi(2) } else { 0.0 };
            freqs.iter().map(|(xi, a)| a * (std::f64::consts::TAU * xi * x).sin()).sum::<f64>() * w
        })
        .unwrap();
        dft(&field)
    }

    #[test]
    fn finds_each_tone_in_order() {
        let spec = windowed_tones(&[(0.5, 1.0), (1.5, 0.5), (3.0, 0.2)]);
        let peaks = detect_peaks(&spec, PEAK_THRESHOLD);
        let xis: Vec<f64> = peaks.iter().map(|p| p.xi).collect();
        assert_eq!(xis, vec![0.5, 1.5, 3.0]);
        assert!(peaks[0].magnitude > peaks[1].magnitude);
    }

    #[test]
    fn threshold_drops_weak_tones() {
        let spec = windowed_tones(&[(0.5, 1.0), (2.0, 0.01)]);
        assert_eq!(detect_peaks(&spec, PEAK_THRESHOLD).len(), 1);
        assert!(detect_peaks(&spec, 0.001).iter().any(|p| p.xi == 2.0));
    }

    #[test]
    fn zero_target_bin_is_an_error() {
        let spec = windowed_tones(&[(0.5, 1.0)]);
        let grid = *spec.grid();
        let zero = Spectrum::new(grid, vec![num_complex::Complex64::new(0.0, 0.0); grid.len()]).unwrap();
        assert!(matches!(peak_relative_errors(&spec, &zero, &[300]), Err(Error::ZeroPeak(44))));
    }

    #[test]
    fn eta_sweep_merges_peaks() {
        let grid = Grid::new(-8.0, 8.0, 512).unwrap();
        let peaks = detect_peaks(&windowed_tones(&[(0.5, 1.0), (1.5, 0.5)]), PEAK_THRESHOLD);
        let etas = default_etas(&grid, &peaks);
        assert!(etas.windows(2).all(|w| w[1] > w[0]));
        assert!(etas.contains(&0.5) && etas.contains(&1.5));
        assert!((etas[0] - grid.dxi()).abs() < 1e-15);
        assert!((etas.last().unwrap() - grid.nyquist() / 2.0).abs() < 1e-12);
        // 0.5 = dxi * 2^3 coincides with one of the log-spaced points
        assert_eq!(etas.len(), 9);
    }
}
