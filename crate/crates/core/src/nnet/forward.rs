use super::{Activation, BumpFunction, Layout, NetworkSpec, Theta};
use crate::error::{Error, Result};

/// Per-layer values from the last forward pass, reused by backpropagation.
///
/// `post[l]` holds `h^(l)(x)` for `l = 0..H-1` (`post[0] = x`) and `pre[l]`
/// holds the affine pre-activation `W^(l) h^(l-1) + b^(l)` for `l = 1..=H`
/// (index 0 unused).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) layout: Layout,
    pub(crate) activation: Activation,
    pub(crate) pre: Vec<Vec<f64>>,
    pub(crate) post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn new(spec: &NetworkSpec) -> Self {
        let widths = spec.widths();
        ForwardCache {
            layout: spec.layout(),
            activation: spec.activation(),
            pre: widths.iter().map(|&n| vec![0.0; n]).collect(),
            post: widths.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// `h^(l)` for `l < H`.
    pub fn hidden(&self, layer: usize) -> &[f64] {
        &self.post[layer]
    }

    pub fn preactivation(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    pub fn output(&self) -> f64 {
        self.pre[self.layout.depth()][0]
    }

    /// Smallest `|z|` over hidden pre-activations; distance to the ReLU kink.
    pub fn min_abs_preactivation(&self) -> f64 {
        let h = self.layout.depth();
        self.pre[1..h]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}

/// Evaluates `h^(H)(x)` into `cache`. `params` must follow the cache's layout.
pub fn forward_into(cache: &mut ForwardCache, params: &[f64], x: &[f64]) -> Result<f64> {
    if params.len() != cache.layout.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.layout.len(),
            actual: params.len(),
        });
    }
    let d = cache.post[0].len();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    cache.post[0].copy_from_slice(x);
    let depth = cache.layout.depth();
    for l in 1..=depth {
        let (rows, cols) = cache.layout.shape(l);
        let w = &params[cache.layout.weights(l)];
        let b = &params[cache.layout.biases(l)];
        let (before, after) = cache.post.split_at_mut(l);
        let input = &before[l - 1];
        let pre = &mut cache.pre[l];
        for i in 0..rows {
            let row = &w[i * cols..(i + 1) * cols];
            let mut z = b[i];
            for (wij, hj) in row.iter().zip(input) {
                z += wij * hj;
            }
            pre[i] = z;
        }
        if l < depth {
            let act = cache.activation;
            for (out, &z) in after[0].iter_mut().zip(pre.iter()) {
                *out = act.eval(z);
            }
        }
    }
    Ok(cache.pre[depth][0])
}

pub fn forward(spec: &NetworkSpec, theta: &Theta, x: &[f64]) -> Result<f64> {
    let mut cache = ForwardCache::new(spec);
    forward_into(&mut cache, theta.as_slice(), x)
}

pub fn forward_cached(spec: &NetworkSpec, theta: &Theta, x: &[f64]) -> Result<(f64, ForwardCache)> {
    let mut cache = ForwardCache::new(spec);
    let y = forward_into(&mut cache, theta.as_slice(), x)?;
    Ok((y, cache))
}

/// Hypothesis `h(x) = h^(H)(x) chi(x)`.
pub fn truncated_forward(
    spec: &NetworkSpec,
    theta: &Theta,
    chi: &BumpFunction,
    x: &[f64],
) -> Result<f64> {
    let weight = chi.eval_point(x);
    let y = forward(spec, theta, x)?;
    Ok(if weight == 1.0 { y } else { y * weight })
}
