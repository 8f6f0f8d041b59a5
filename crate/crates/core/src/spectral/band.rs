use super::{Grid, Spectrum};
use crate::error::{Error, Result};

/// Largest Japanese-bracket exponent accepted by [`japanese_bracket_norm`].
pub const MAX_BRACKET_ORDER: u32 = 16;

/// Low band `B_eta = {k : |xi_k| <= eta}` and its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMask {
    eta: f64,
    dxi: f64,
    low: Vec<bool>,
}

impl BandMask {
    pub fn new(grid: &Grid, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be >= 0, got {eta}")));
        }
        let low = grid.bins().map(|k| grid.frequency(k).abs() <= eta).collect();
        Ok(BandMask {
            eta,
            dxi: grid.dxi(),
            low,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }

    pub fn is_low(&self, index: usize) -> bool {
        self.low[index]
    }

    pub fn low_count(&self) -> usize {
        self.low.iter().filter(|&&b| b).count()
    }
}

/// Band-integrated values; `total` is `low + high` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSplit {
    pub low: f64,
    pub high: f64,
}

impl BandSplit {
    pub fn total(&self) -> f64 {
        self.low + self.high
    }
}

/// Per-bin residual energy `q(xi_k) = |h^(xi_k) - f^(xi_k)|^2`.
pub fn residual_energy(hhat: &Spectrum, fhat: &Spectrum) -> Result<Vec<f64>> {
    if !hhat.grid().same_as(fhat.grid()) {
        return Err(Error::GridMismatch("hypothesis and target spectra".into()));
    }
    Ok(hhat
        .coeffs()
        .iter()
        .zip(fhat.coeffs())
        .map(|(h, f)| (h - f).norm_sqr())
        .collect())
}

/// Integrates `values` over `B_eta` and its complement, visiting bins in
/// spectrum order so that nested masks give monotone sums.
pub fn band_split(values: &[f64], mask: &BandMask) -> Result<BandSplit> {
    if values.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            actual: values.len(),
        });
    }
    let (mut low, mut high) = (0.0, 0.0);
    for (v, &is_low) in values.iter().zip(&mask.low) {
        if is_low {
            low += v;
        } else {
            high += v;
        }
    }
    Ok(BandSplit {
        low: low * mask.dxi,
        high: high * mask.dxi,
    })
}

/// `<xi> = (1 + |xi|^2)^(1/2)`.
pub fn japanese_bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// `(sum_k <xi_k>^(m p) |v_k|^p dxi)^(1/p)` for `p` in `{1, 2}`; `magnitudes`
/// is in spectrum order.
pub fn japanese_bracket_norm(grid: &Grid, magnitudes: &[f64], m: u32, p: u32) -> Result<f64> {
    if magnitudes.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: magnitudes.len(),
        });
    }
    if m > MAX_BRACKET_ORDER {
        return Err(Error::InvalidArgument(format!(
            "bracket order {m} exceeds cap {MAX_BRACKET_ORDER}"
        )));
    }
    let sum: f64 = match p {
        1 => grid
            .bins()
            .zip(magnitudes)
            .map(|(k, v)| japanese_bracket(grid.frequency(k)).powi(m as i32) * v.abs())
            .sum(),
        2 => grid
            .bins()
            .zip(magnitudes)
            .map(|(k, v)| japanese_bracket(grid.frequency(k)).powi(2 * m as i32) * v * v)
            .sum(),
        _ => {
            return Err(Error::InvalidArgument(format!("norm exponent must be 1 or 2, got {p}")))
        }
    };
    let integral = sum * grid.dxi();
    Ok(if p == 1 { integral } else { integral.sqrt() })
}

/// Share of `sum q` above half the Nyquist frequency; large values mean
/// the grid under-resolves the residual.
pub fn top_octave_fraction(grid: &Grid, q: &[f64]) -> f64 {
    let cut = grid.nyquist() / 2.0;
    let (mut top, mut all) = (0.0, 0.0);
    for (k, v) in grid.bins().zip(q) {
        all += v;
        if grid.frequency(k).abs() > cut {
            top += v;
        }
    }
    if all > 0.0 {
        top / all
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dft, SampledField};
    use num_complex::Complex64;

    fn grid() -> Grid {
        Grid::new(-2.0, 2.0, 64).unwrap()
    }

    #[test]
    fn masks_partition_bins() {
        let g = grid();
        let zero = BandMask::new(&g, 0.0).unwrap();
        assert_eq!(zero.low_count(), 1);
        assert!(zero.is_low(g.bin_index(0).unwrap()));
        let all = BandMask::new(&g, g.nyquist()).unwrap();
        assert_eq!(all.low_count(), 64);
        let mid = BandMask::new(&g, 1.0).unwrap();
        // |k|/4 <= 1 -> k in -4..=4
        assert_eq!(mid.low_count(), 9);
        assert!(BandMask::new(&g, -1.0).is_err());
    }

    #[test]
    fn split_is_additive_and_monotone() {
        let g = grid();
        let q: Vec<f64> = (0..64).map(|i| ((i * 7919) % 13) as f64 * 0.137).collect();
        let total: f64 = q.iter().sum::<f64>() * g.dxi();
        let mut prev_low = -1.0;
        let mut prev_high = f64::INFINITY;
        for i in 0..=40 {
            let eta = i as f64 * 0.25;
            let s = band_split(&q, &BandMask::new(&g, eta).unwrap()).unwrap();
            assert_eq!(s.low + s.high, s.total());
            assert!((s.total() - total).abs() < 1e-12 * total);
            assert!(s.low >= prev_low);
            assert!(s.high <= prev_high);
            prev_low = s.low;
            prev_high = s.high;
        }
    }

    #[test]
    fn dc_only_energy_has_no_high_band() {
        let g = grid();
        let mut q = vec![0.0; 64];
        q[g.bin_index(0).unwrap()] = 2.5;
        let s = band_split(&q, &BandMask::new(&g, 0.1).unwrap()).unwrap();
        assert_eq!(s.high, 0.0);
        assert_eq!(s.low, 2.5 * g.dxi());
    }

    #[test]
    fn residual_energy_cases() {
        let g = grid();
        let f = dft(&SampledField::from_fn(g, |x| (-x * x).exp()).unwrap());
        assert!(residual_energy(&f, &f).unwrap().iter().all(|&v| v == 0.0));

        let mut coeffs = f.coeffs().to_vec();
        let idx = g.bin_index(3).unwrap();
        coeffs[idx] += Complex64::new(0.0, 1.5);
        let h = Spectrum::new(g, coeffs).unwrap();
        let q = residual_energy(&h, &f).unwrap();
        for (i, v) in q.iter().enumerate() {
            if i == idx {
                assert!((v - 2.25).abs() < 1e-14);
            } else {
                assert_eq!(*v, 0.0);
            }
        }

        let other = dft(&SampledField::from_fn(Grid::new(0.0, 1.0, 64).unwrap(), |x| x).unwrap());
        assert!(residual_energy(&f, &other).is_err());
    }

    #[test]
    fn plancherel_for_residuals() {
        let g = Grid::new(-3.5, 3.5, 256).unwrap();
        let h = SampledField::from_fn(g, |x| (3.0 * x).sin() * (-x * x / 4.0).exp()).unwrap();
        let f = SampledField::from_fn(g, |x| x.cos() * (-x * x / 3.0).exp()).unwrap();
        let q = residual_energy(&dft(&h), &dft(&f)).unwrap();
        let spectral: f64 = q.iter().sum::<f64>() * g.dxi();
        let spatial: f64 = h
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * g.dx();
        assert!((spectral - spatial).abs() < 1e-10 * spatial);
    }

    #[test]
    fn bracket_values_and_reduction() {
        assert_eq!(japanese_bracket(0.0), 1.0);
        assert!((japanese_bracket(1.0) - 2f64.sqrt()).abs() < 1e-15);
        let g = grid();
        let v: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let plain = (v.iter().map(|x| x * x).sum::<f64>() * g.dxi()).sqrt();
        let n0 = japanese_bracket_norm(&g, &v, 0, 2).unwrap();
        assert!((n0 - plain).abs() < 1e-12);
        let n2 = japanese_bracket_norm(&g, &v, 2, 2).unwrap();
        assert!(n2 > n0);
        assert!(japanese_bracket_norm(&g, &v, 99, 2).is_err());
        assert!(japanese_bracket_norm(&g, &v, 1, 3).is_err());
        let l1 = japanese_bracket_norm(&g, &v, 0, 1).unwrap();
        assert!((l1 - v.iter().sum::<f64>() * g.dxi()).abs() < 1e-12);
    }

    #[test]
    fn top_octave_detects_aliasing_risk() {
        let g = grid();
        let mut q = vec![0.0; 64];
        q[g.bin_index(0).unwrap()] = 1.0;
        assert_eq!(top_octave_fraction(&g, &q), 0.0);
        q[g.bin_index(-30).unwrap()] = 1.0;
        assert_eq!(top_octave_fraction(&g, &q), 0.5);
    }
}
