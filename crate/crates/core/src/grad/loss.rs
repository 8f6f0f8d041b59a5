use serde::{Deserialize, Serialize};

use super::{GradWorkspace, LossKind};
use crate::error::{Error, Result};
use crate::flow::Objective;
use crate::nnet::{BumpFunction, NetworkSpec, PopulationDensity, TargetFunction, Theta};
use crate::spectral::Grid;

/// How the population measure `mu` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Sample mean over a training set.
    Empirical,
    /// Rectangle rule on a periodic grid, weighted by `rho`.
    Quadrature,
}

/// Discretized measure: 1-D points, weights, truncated targets
/// `f(x) = f_target(x) chi(x)` and cached `chi(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossData {
    kind: MeasureKind,
    points: Vec<f64>,
    weights: Vec<f64>,
    targets: Vec<f64>,
    chi: Vec<f64>,
}

impl LossData {
    pub fn empirical(xs: &[f64], target: &TargetFunction, chi: &BumpFunction) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyData);
        }
        let w = 1.0 / xs.len() as f64;
        let chi_vals: Vec<f64> = xs.iter().map(|&x| chi.eval(x)).collect();
        Ok(LossData {
            kind: MeasureKind::Empirical,
            points: xs.to_vec(),
            weights: vec![w; xs.len()],
            targets: xs.iter().zip(&chi_vals).map(|(&x, c)| target.eval(x) * c).collect(),
            chi: chi_vals,
        })
    }

    /// Nodes of `grid` with weights `dx rho(x_j)`; the rule integrates
    /// exactly the quantity the grid's discrete Plancherel identity sees.
    pub fn quadrature(
        grid: &Grid,
        density: &PopulationDensity,
        target: &TargetFunction,
        chi: &BumpFunction,
    ) -> Result<Self> {
        let points: Vec<f64> = grid.nodes().collect();
        let chi_vals: Vec<f64> = points.iter().map(|&x| chi.eval(x)).collect();
        Ok(LossData {
            kind: MeasureKind::Quadrature,
            weights: points.iter().map(|&x| grid.dx() * density.eval(x)).collect(),
            targets: points.iter().zip(&chi_vals).map(|(&x, c)| target.eval(x) * c).collect(),
            points,
            chi: chi_vals,
        })
    }

    /// Explicit points, weights and already-truncated targets.
    pub fn from_parts(
        kind: MeasureKind,
        points: Vec<f64>,
        weights: Vec<f64>,
        targets: Vec<f64>,
        chi: Vec<f64>,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        for len in [weights.len(), targets.len(), chi.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(LossData {
            kind,
            points,
            weights,
            targets,
            chi,
        })
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Loss value and exact gradient, reusing `ws`. Contributions are summed
    /// in point order.
    pub fn evaluate(
        &self,
        ws: &mut GradWorkspace,
        loss: LossKind,
        params: &[f64],
        grad: &mut [f64],
    ) -> Result<f64> {
        if self.points.is_empty() {
            return Err(Error::EmptyData);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for i in 0..self.points.len() {
            let (w, c) = (self.weights[i], self.chi[i]);
            if w == 0.0 || c == 0.0 {
                value += w * loss.value(-self.targets[i]);
                continue;
            }
            let h = ws.forward(params, &self.points[i..i + 1])? * c;
            let r = h - self.targets[i];
            value += w * loss.value(r);
            let scale = w * loss.deriv(r) * c;
            if scale != 0.0 {
                ws.accumulate(params, scale, grad);
            }
        }
        if !value.is_finite() {
            return Err(Error::Divergence {
                step: 0,
                quantity: "loss",
                value,
            });
        }
        Ok(value)
    }

    /// Loss value only.
    pub fn value(&self, ws: &mut GradWorkspace, loss: LossKind, params: &[f64]) -> Result<f64> {
        let mut value = 0.0;
        for i in 0..self.points.len() {
            let c = self.chi[i];
            let h = if c == 0.0 {
                0.0
            } else {
                ws.forward(params, &self.points[i..i + 1])? * c
            };
            value += self.weights[i] * loss.value(h - self.targets[i]);
        }
        Ok(value)
    }
}

/// `mu`-weighted loss and its gradient.
pub fn grad_loss(
    spec: &NetworkSpec,
    theta: &Theta,
    loss: LossKind,
    data: &LossData,
) -> Result<(f64, Vec<f64>)> {
    if spec.input_dim() != 1 {
        return Err(Error::InvalidSpec("loss data is one-dimensional".into()));
    }
    let mut ws = GradWorkspace::new(spec);
    let mut grad = vec![0.0; spec.size()];
    let value = data.evaluate(&mut ws, loss, theta.as_slice(), &mut grad)?;
    Ok((value, grad))
}

/// A network loss as a vector field for the integrators.
#[derive(Debug, Clone)]
pub struct LossObjective {
    spec: NetworkSpec,
    loss: LossKind,
    data: LossData,
    ws: std::cell::RefCell<GradWorkspace>,
}

impl LossObjective {
    pub fn new(spec: NetworkSpec, loss: LossKind, data: LossData) -> Result<Self> {
        if spec.input_dim() != 1 {
            return Err(Error::InvalidSpec("loss data is one-dimensional".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let ws = std::cell::RefCell::new(GradWorkspace::new(&spec));
        Ok(LossObjective {
            spec,
            loss,
            data,
            ws,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn data(&self) -> &LossData {
        &self.data
    }
}

impl Objective for LossObjective {
    fn dim(&self) -> usize {
        self.spec.size()
    }

    fn value_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.data
            .evaluate(&mut self.ws.borrow_mut(), self.loss, theta, grad)
    }
}
