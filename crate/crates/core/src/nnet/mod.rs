//! Fully connected networks `h^(0) .. h^(H)`, their parameters, and the
//! functions they are fitted against.

mod bump;
mod density;
mod forward;
mod params;
mod target;

pub use bump::{BumpFunction, BumpProfile};
pub use density::{DensityKind, PopulationDensity};
pub use forward::{forward, forward_cached, forward_into, truncated_forward, ForwardCache};
pub use params::{LayerParams, Layout, Theta};
pub use target::{TargetFunction, Tone};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise nonlinearity shared by every hidden neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative; ReLU uses 0 at the kink.
    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }

    /// Sobolev order `k` with `sigma in W^{k,inf}_loc`.
    pub fn smoothness(self) -> Smoothness {
        match self {
            Activation::Relu => Smoothness::Finite(1),
            Activation::Tanh | Activation::Sigmoid => Smoothness::Infinite,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

/// Regularity order `k`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

impl Smoothness {
    pub fn min(self, other: Smoothness) -> Smoothness {
        match (self, other) {
            (Smoothness::Infinite, s) | (s, Smoothness::Infinite) => s,
            (Smoothness::Finite(a), Smoothness::Finite(b)) => Smoothness::Finite(a.min(b)),
        }
    }

    pub fn at_least(self, k: u32) -> bool {
        match self {
            Smoothness::Infinite => true,
            Smoothness::Finite(s) => s >= k,
        }
    }
}

impl std::fmt::Display for Smoothness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Smoothness::Finite(k) => write!(f, "{k}"),
            Smoothness::Infinite => f.write_str("inf"),
        }
    }
}

/// Architecture: layer widths `n_0 .. n_H` and the hidden activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct NetworkSpec {
    widths: Vec<usize>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    widths: Vec<usize>,
    activation: Activation,
}

impl TryFrom<RawSpec> for NetworkSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        NetworkSpec::new(raw.widths, raw.activation)
    }
}

impl From<NetworkSpec> for RawSpec {
    fn from(spec: NetworkSpec) -> Self {
        RawSpec {
            widths: spec.widths,
            activation: spec.activation,
        }
    }
}

impl NetworkSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least input and output layers, got {} widths",
                widths.len()
            )));
        }
        if let Some(l) = widths.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSpec(format!("layer {l} has zero width")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::InvalidSpec("output width n_H must be 1".into()));
        }
        Ok(NetworkSpec { widths, activation })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Number of affine layers `H`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn smoothness(&self) -> Smoothness {
        self.activation.smoothness()
    }

    pub fn size(&self) -> usize {
        network_size(self)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }

    /// Same activation and depth, hidden layers replaced by `width`.
    pub fn with_hidden_width(&self, width: usize) -> Result<Self> {
        let h = self.depth();
        let widths = self
            .widths
            .iter()
            .enumerate()
            .map(|(l, &n)| if l == 0 || l == h { n } else { width })
            .collect();
        NetworkSpec::new(widths, self.activation)
    }

    pub fn describe(&self) -> String {
        let w: Vec<String> = self.widths.iter().map(|n| n.to_string()).collect();
        format!("{} {}", self.activation.name(), w.join("-"))
    }
}

/// Parameter count `N = sum_{l=0}^{H-1} (n_l + 1) n_{l+1}`.
pub fn network_size(spec: &NetworkSpec) -> usize {
    spec.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_of_reference_architectures() {
        let fig1 = NetworkSpec::new(vec![1, 200, 50, 1], Activation::Tanh).unwrap();
        assert_eq!(network_size(&fig1), 2 * 200 + 201 * 50 + 51);
        assert_eq!(network_size(&fig1), 10501);

        let affine = NetworkSpec::new(vec![1, 1], Activation::Relu).unwrap();
        assert_eq!(network_size(&affine), 2);

        for d in 1..5 {
            for n in [1, 7, 30] {
                let spec = NetworkSpec::new(vec![d, n, 1], Activation::Sigmoid).unwrap();
                assert_eq!(network_size(&spec), (d + 2) * n + 1);
            }
        }
    }

    #[test]
    fn rejects_malformed_widths() {
        assert!(NetworkSpec::new(vec![1], Activation::Tanh).is_err());
        assert!(NetworkSpec::new(vec![1, 0, 1], Activation::Tanh).is_err());
        assert!(NetworkSpec::new(vec![1, 4, 2], Activation::Tanh).is_err());
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Relu.eval(-1.0), 0.0);
        assert_eq!(Activation::Relu.eval(2.0), 2.0);
        assert_eq!(Activation::Sigmoid.eval(0.0), 0.5);
        assert_eq!(Activation::Relu.deriv(0.0), 0.0);
        assert_eq!(Activation::Tanh.eval(0.0), 0.0);
    }

    #[test]
    fn activation_derivatives_match_central_differences() {
        let h = 1e-5;
        for act in [Activation::Tanh, Activation::Sigmoid] {
            for z in [-2.0, 0.0, 1.0] {
                let fd = (act.eval(z + h) - act.eval(z - h)) / (2.0 * h);
                let exact = act.deriv(z);
                let rel = (fd - exact).abs() / exact.abs();
                assert!(rel < 1e-8, "{act:?} at {z}: rel err {rel:e}");
            }
        }
        // ReLU away from the kink
        for z in [-2.0, 1.0] {
            let fd = (Activation::Relu.eval(z + h) - Activation::Relu.eval(z - h)) / (2.0 * h);
            assert!((fd - Activation::Relu.deriv(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn smoothness_follows_activation() {
        assert_eq!(Activation::Relu.smoothness(), Smoothness::Finite(1));
        assert_eq!(Activation::Tanh.smoothness(), Smoothness::Infinite);
        assert_eq!(
            Smoothness::Infinite.min(Smoothness::Finite(3)),
            Smoothness::Finite(3)
        );
    }

    #[test]
    fn spec_serde_validates() {
        let ok: NetworkSpec =
            serde_json::from_str(r#"{"widths":[1,8,1],"activation":"tanh"}"#).unwrap();
        assert_eq!(ok.size(), 25);
        let bad = serde_json::from_str::<NetworkSpec>(r#"{"widths":[1,8,2],"activation":"tanh"}"#);
        assert!(bad.is_err());
    }
}
