use crate::error::{Error, Result};
use crate::nnet::{forward_into, BumpFunction, ForwardCache, NetworkSpec, Theta};

/// Scratch space for repeated forward/backward passes on one architecture.
#[derive(Debug, Clone)]
pub struct GradWorkspace {
    pub(crate) cache: ForwardCache,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl GradWorkspace {
    pub fn new(spec: &NetworkSpec) -> Self {
        let widest = spec.widths().iter().copied().max().unwrap_or(1);
        GradWorkspace {
            cache: ForwardCache::new(spec),
            delta: Vec::with_capacity(widest),
            next: Vec::with_capacity(widest),
        }
    }

    pub fn cache(&self) -> &ForwardCache {
        &self.cache
    }

    /// Forward pass at `x`; returns `h^(H)(x)`.
    pub fn forward(&mut self, params: &[f64], x: &[f64]) -> Result<f64> {
        forward_into(&mut self.cache, params, x)
    }

    /// Adds `scale * grad_theta h^(H)` at the last forward point into `grad`.
    pub fn accumulate(&mut self, params: &[f64], scale: f64, grad: &mut [f64]) {
        let layout = &self.cache.layout;
        let act = self.cache.activation;
        debug_assert_eq!(grad.len(), layout.len());
        self.delta.clear();
        self.delta.push(scale);
        for l in (1..=layout.depth()).rev() {
            let (rows, cols) = layout.shape(l);
            let input = &self.cache.post[l - 1];
            let w_off = layout.weights(l).start;
            let b_off = layout.biases(l).start;
            for (i, &d) in self.delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[w_off + i * cols..w_off + (i + 1) * cols];
                for (g, h) in row.iter_mut().zip(input) {
                    *g += d * h;
                }
                grad[b_off + i] += d;
            }
            if l > 1 {
                let w = &params[layout.weights(l)];
                self.next.clear();
                self.next.resize(cols, 0.0);
                for i in 0..rows {
                    let d = self.delta[i];
                    if d == 0.0 {
                        continue;
                    }
                    for (n, wij) in self.next.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
                        *n += wij * d;
                    }
                }
                for (n, &z) in self.next.iter_mut().zip(&self.cache.pre[l - 1]) {
                    *n *= act.deriv(z);
                }
                std::mem::swap(&mut self.delta, &mut self.next);
            }
        }
    }
}

impl GradWorkspace {
    /// Forward pass at `x` plus the directional derivative
    /// `grad_theta h^(H)(x) . tangent`, by forward-mode propagation.
    pub fn forward_tangent(&mut self, params: &[f64], tangent: &[f64], x: &[f64]) -> Result<(f64, f64)> {
        let y = self.forward(params, x)?;
        let layout = &self.cache.layout;
        if tangent.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                actual: tangent.len(),
            });
        }
        let act = self.cache.activation;
        let depth = layout.depth();
        // delta holds d h^(l-1); the input does not move
        self.delta.clear();
        self.delta.resize(x.len(), 0.0);
        for l in 1..=depth {
            let (rows, cols) = layout.shape(l);
            let w = &params[layout.weights(l)];
            let dw = &tangent[layout.weights(l)];
            let db = &tangent[layout.biases(l)];
            let input = &self.cache.post[l - 1];
            self.next.clear();
            for i in 0..rows {
                let mut dz = db[i];
                let r = i * cols..(i + 1) * cols;
                for ((dwij, wij), (hj, dhj)) in dw[r.clone()].iter().zip(&w[r]).zip(input.iter().zip(&self.delta)) {
                    dz += dwij * hj + wij * dhj;
                }
                self.next.push(if l < depth {
                    act.deriv(self.cache.pre[l][i]) * dz
                } else {
                    dz
                });
            }
            std::mem::swap(&mut self.delta, &mut self.next);
        }
        Ok((y, self.delta[0]))
    }
}

/// `grad_theta h^(H)(x)` into `grad` (overwritten), optionally times `chi(x)`.
pub fn output_gradient_into(
    ws: &mut GradWorkspace,
    params: &[f64],
    x: &[f64],
    chi: Option<&BumpFunction>,
    grad: &mut [f64],
) -> Result<f64> {
    let y = ws.forward(params, x)?;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let weight = chi.map_or(1.0, |c| c.eval_point(x));
    if weight != 0.0 {
        ws.accumulate(params, weight, grad);
    }
    Ok(y * weight)
}

/// `grad_theta h(x, theta)`; with `chi` the truncated hypothesis is used.
pub fn grad_output(
    spec: &NetworkSpec,
    theta: &Theta,
    x: &[f64],
    chi: Option<&BumpFunction>,
) -> Result<Vec<f64>> {
    let mut ws = GradWorkspace::new(spec);
    let mut grad = vec![0.0; spec.size()];
    output_gradient_into(&mut ws, theta.as_slice(), x, chi, &mut grad)?;
    Ok(grad)
}
