use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::NetworkSpec;
use crate::error::{Error, Result};

/// Offsets of `W^(l)` (row-major, `n_l x n_{l-1}`) and `b^(l)` inside the
/// flat parameter vector, for `l = 1..=H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    widths: Vec<usize>,
    weight_offsets: Vec<usize>,
    bias_offsets: Vec<usize>,
    len: usize,
}

impl Layout {
    pub fn new(spec: &NetworkSpec) -> Self {
        let widths = spec.widths().to_vec();
        let mut weight_offsets = Vec::with_capacity(widths.len() - 1);
        let mut bias_offsets = Vec::with_capacity(widths.len() - 1);
        let mut cursor = 0;
        for w in widths.windows(2) {
            weight_offsets.push(cursor);
            cursor += w[0] * w[1];
            bias_offsets.push(cursor);
            cursor += w[1];
        }
        Layout {
            widths,
            weight_offsets,
            bias_offsets,
            len: cursor,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// `(n_l, n_{l-1})` for layer `l` in `1..=H`.
    pub fn shape(&self, layer: usize) -> (usize, usize) {
        (self.widths[layer], self.widths[layer - 1])
    }

    pub fn weights(&self, layer: usize) -> Range<usize> {
        let (rows, cols) = self.shape(layer);
        let start = self.weight_offsets[layer - 1];
        start..start + rows * cols
    }

    pub fn biases(&self, layer: usize) -> Range<usize> {
        let start = self.bias_offsets[layer - 1];
        start..start + self.widths[layer]
    }

    /// Flat index of `W^(l)_{i,j}` (zero-based neuron `i`, input `j`).
    pub fn weight_index(&self, layer: usize, i: usize, j: usize) -> usize {
        let (_, cols) = self.shape(layer);
        self.weight_offsets[layer - 1] + i * cols + j
    }

    pub fn bias_index(&self, layer: usize, i: usize) -> usize {
        self.bias_offsets[layer - 1] + i
    }
}

/// Structured copy of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row `i` is `W^(l)_i`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Flat parameter vector `theta` of length `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Theta {
    values: Vec<f64>,
}

impl Theta {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Theta {
            values: vec![0.0; spec.size()],
        }
    }

    pub fn from_vec(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        let expected = spec.size();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Theta { values })
    }

    /// Weights `N(0, 1/fan_in)`, biases zero.
    pub fn init_gaussian(spec: &NetworkSpec, seed: u64) -> Self {
        let layout = spec.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; layout.len()];
        for layer in 1..=layout.depth() {
            let (_, fan_in) = layout.shape(layer);
            let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).unwrap();
            for v in &mut values[layout.weights(layer)] {
                *v = normal.sample(&mut rng);
            }
        }
        Theta { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn unflatten(&self, spec: &NetworkSpec) -> Result<Vec<LayerParams>> {
        let layout = spec.layout();
        if layout.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                actual: self.values.len(),
            });
        }
        Ok((1..=layout.depth())
            .map(|l| {
                let (_, cols) = layout.shape(l);
                LayerParams {
                    weights: self.values[layout.weights(l)]
                        .chunks(cols)
                        .map(<[f64]>::to_vec)
                        .collect(),
                    biases: self.values[layout.biases(l)].to_vec(),
                }
            })
            .collect())
    }

    pub fn flatten(spec: &NetworkSpec, layers: &[LayerParams]) -> Result<Self> {
        let layout = spec.layout();
        if layers.len() != layout.depth() {
            return Err(Error::DimensionMismatch {
                expected: layout.depth(),
                actual: layers.len(),
            });
        }
        let mut values = Vec::with_capacity(layout.len());
        for (l, layer) in (1..).zip(layers) {
            let (rows, cols) = layout.shape(l);
            if layer.weights.len() != rows || layer.biases.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: layer.weights.len(),
                });
            }
            for row in &layer.weights {
                if row.len() != cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        actual: row.len(),
                    });
                }
                values.extend_from_slice(row);
            }
            values.extend_from_slice(&layer.biases);
        }
        Ok(Theta { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::Activation;
    use proptest::prelude::*;

    fn arb_spec() -> impl Strategy<Value = NetworkSpec> {
        (1usize..=5, prop::collection::vec(1usize..=64, 0..5)).prop_map(|(d, hidden)| {
            let mut widths = vec![d];
            widths.extend(hidden);
            widths.push(1);
            NetworkSpec::new(widths, Activation::Tanh).unwrap()
        })
    }

    proptest! {
        #[test]
        fn layout_length_matches_size(spec in arb_spec()) {
            prop_assert_eq!(spec.layout().len(), spec.size());
            let layout = spec.layout();
            let last = layout.biases(layout.depth());
            prop_assert_eq!(last.end, spec.size());
        }

        #[test]
        fn flatten_unflatten_is_identity(spec in arb_spec(), seed in any::<u64>()) {
            let theta = Theta::init_gaussian(&spec, seed);
            let mut v = theta.clone().into_vec();
            // put something nonzero in the biases too
            for (i, x) in v.iter_mut().enumerate() {
                *x += (i as f64) * 1e-3;
            }
            let theta = Theta::from_vec(&spec, v.clone()).unwrap();
            let back = Theta::flatten(&spec, &theta.unflatten(&spec).unwrap()).unwrap();
            prop_assert_eq!(back.as_slice(), &v[..]);
        }
    }

    #[test]
    fn init_is_seeded_and_biases_zero() {
        let spec = NetworkSpec::new(vec![1, 16, 4, 1], Activation::Tanh).unwrap();
        let a = Theta::init_gaussian(&spec, 3);
        let b = Theta::init_gaussian(&spec, 3);
        let c = Theta::init_gaussian(&spec, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let layout = spec.layout();
        for l in 1..=layout.depth() {
            assert!(a.as_slice()[layout.biases(l)].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn weight_index_is_row_major() {
        let spec = NetworkSpec::new(vec![3, 2, 1], Activation::Relu).unwrap();
        let layout = spec.layout();
        assert_eq!(layout.weight_index(1, 0, 0), 0);
        assert_eq!(layout.weight_index(1, 1, 2), 5);
        assert_eq!(layout.bias_index(1, 1), 7);
        assert_eq!(layout.weight_index(2, 0, 1), 9);
        assert_eq!(layout.bias_index(2, 0), 10);
        assert_eq!(layout.len(), 11);
    }

    #[test]
    fn from_vec_checks_length() {
        let spec = NetworkSpec::new(vec![1, 3, 1], Activation::Relu).unwrap();
        assert!(matches!(
            Theta::from_vec(&spec, vec![0.0; 5]),
            Err(Error::DimensionMismatch { expected: 10, actual: 5 })
        ));
    }
}
