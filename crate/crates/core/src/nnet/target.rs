use serde::{Deserialize, Serialize};

use super::Smoothness;
use crate::error::{Error, Result};

/// One component `amplitude * sin(omega * x)`; `omega` in radians per unit
/// length, so the tone sits at `omega / 2pi` cycles per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub omega: f64,
    pub amplitude: f64,
}

impl Tone {
    pub fn frequency(&self) -> f64 {
        self.omega / std::f64::consts::TAU
    }
}

/// The function `f_target` a network is trained to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetFunction {
    Tones { tones: Vec<Tone> },
    /// `sum_{j=1}^{terms} sin(j x / 10) / j`.
    #[serde(rename = "paper_multitone")]
    Multitone { terms: usize },
    /// Piecewise-linear table on `x0 + i dx`, held constant past either end.
    Table { x0: f64, dx: f64, values: Vec<f64> },
}

impl TargetFunction {
    pub fn tones(tones: impl IntoIterator<Item = (f64, f64)>) -> Self {
        TargetFunction::Tones {
            tones: tones
                .into_iter()
                .map(|(omega, amplitude)| Tone { omega, amplitude })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetFunction::Tones { tones } => {
                if tones.is_empty() {
                    return Err(Error::InvalidArgument("tone list is empty".into()));
                }
                if tones
                    .iter()
                    .any(|t| !t.omega.is_finite() || !t.amplitude.is_finite())
                {
                    return Err(Error::InvalidArgument("non-finite tone".into()));
                }
            }
            TargetFunction::Multitone { terms } => {
                if *terms == 0 {
                    return Err(Error::InvalidArgument("multitone needs terms >= 1".into()));
                }
            }
            TargetFunction::Table { x0, dx, values } => {
                if values.len() < 2 || !(*dx > 0.0) || !x0.is_finite() {
                    return Err(Error::InvalidArgument(
                        "table needs >= 2 values and dx > 0".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("table holds non-finite values".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TargetFunction::Tones { tones } => tones
                .iter()
                .map(|t| t.amplitude * (t.omega * x).sin())
                .sum(),
            TargetFunction::Multitone { terms } => (1..=*terms)
                .map(|j| {
                    let j = j as f64;
                    (j * x / 10.0).sin() / j
                })
                .sum(),
            TargetFunction::Table { x0, dx, values } => {
                let last = values.len() - 1;
                let s = (x - x0) / dx;
                if s <= 0.0 {
                    values[0]
                } else if s >= last as f64 {
                    values[last]
                } else {
                    let i = s.floor() as usize;
                    let frac = s - i as f64;
                    values[i] + frac * (values[i + 1] - values[i])
                }
            }
        }
    }

    /// Highest component frequency in cycles per unit, when known.
    pub fn max_frequency(&self) -> Option<f64> {
        match self {
            TargetFunction::Tones { tones } => tones
                .iter()
                .map(|t| t.frequency().abs())
                .fold(None, |m, f| Some(m.map_or(f, |m: f64| m.max(f)))),
            TargetFunction::Multitone { terms } => Some(*terms as f64 / 10.0 / std::f64::consts::TAU),
            TargetFunction::Table { .. } => None,
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            TargetFunction::Table { .. } => Smoothness::Finite(1),
            _ => Smoothness::Infinite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_frequency_per_kind() {
        let t = TargetFunction::tones([(1.0, 1.0), (-10.0, 0.1), (3.0, 0.3)]);
        assert!((t.max_frequency().unwrap() - 10.0 / std::f64::consts::TAU).abs() < 1e-15);
        let m = TargetFunction::Multitone { terms: 500 };
        assert!((m.max_frequency().unwrap() - 50.0 / std::f64::consts::TAU).abs() < 1e-12);
        let table = TargetFunction::Table { x0: 0.0, dx: 1.0, values: vec![0.0, 1.0] };
        assert_eq!(table.max_frequency(), None);
    }

    #[test]
    fn multitone_matches_direct_sum() {
        let f = TargetFunction::Multitone { terms: 500 };
        for x in [-3.0, -0.1, 0.0, 1.7] {
            let mut direct = 0.0;
            for j in 1..=500 {
                direct += (j as f64 * x / 10.0).sin() / j as f64;
            }
            assert!((f.eval(x) - direct).abs() < 1e-13);
        }
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    fn multitone_approximates_sawtooth() {
        // sum sin(j y)/j -> (pi - y)/2 on (0, 2pi)
        let f = TargetFunction::Multitone { terms: 500 };
        let y: f64 = 1.5 / 10.0;
        let limit = (std::f64::consts::PI - y) / 2.0;
        assert!((f.eval(1.5) - limit).abs() < 0.05);
    }

    #[test]
    fn tones_sum_their_components() {
        let f = TargetFunction::tones([(1.0, 1.0), (3.0, 1.0 / 3.0)]);
        let x = 0.4_f64;
        assert!((f.eval(x) - (x.sin() + (3.0 * x).sin() / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let f = TargetFunction::Table {
            x0: 0.0,
            dx: 0.5,
            values: vec![0.0, 1.0, 3.0],
        };
        assert_eq!(f.eval(0.25), 0.5);
        assert_eq!(f.eval(0.75), 2.0);
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(9.0), 3.0);
        f.validate().unwrap();
    }

    #[test]
    fn validation_catches_degenerate_targets() {
        assert!(TargetFunction::Tones { tones: vec![] }.validate().is_err());
        assert!(TargetFunction::Multitone { terms: 0 }.validate().is_err());
        let bad = TargetFunction::Table {
            x0: 0.0,
            dx: 0.0,
            values: vec![1.0, 2.0],
        };
        assert!(bad.validate().is_err());
    }
}
