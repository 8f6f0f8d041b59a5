//! Training dynamics: explicit gradient-flow integrators and full-batch Adam,
//! recorded as checkpointed trajectories.

mod io;
mod windows;

pub use io::{read_trajectory, write_trajectory, TrajectoryHeader, FORMAT_VERSION};
pub use windows::{half_life_windows, half_life_windows_with_ratio, HalfLifeWindow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Divergence guard on the loss and on `|theta|`.
pub const DIVERGENCE_GUARD: f64 = 1e12;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// A differentiable scalar function of the parameters.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the value.
    fn value_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    GradientFlowEuler,
    GradientFlowRk4,
    Adam,
}

impl Integrator {
    pub fn is_gradient_flow(self) -> bool {
        !matches!(self, Integrator::Adam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub integrator: Integrator,
    /// Time step (learning rate for Adam).
    pub step: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub seed: u64,
    /// Assumed bound `R` on `|theta(t)|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

fn default_stride() -> usize {
    10
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("flow.step", "must be positive and finite"));
        }
        if self.stride == 0 {
            return Err(Error::config("flow.stride", "must be >= 1"));
        }
        if let Some(r) = self.bound {
            if !(r > 0.0) {
                return Err(Error::config("flow.bound", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub t: f64,
    pub loss: f64,
    pub theta: Vec<f64>,
    /// Gradient of the training loss at `theta`.
    pub grad: Vec<f64>,
    /// `-grad` for gradient flows; finite difference of iterates for Adam.
    pub dtheta: Vec<f64>,
}

impl Checkpoint {
    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub config: FlowConfig,
    pub checkpoints: Vec<Checkpoint>,
    /// `grad L(theta_0) = 0`: the dynamics never moves.
    pub trivial: bool,
    /// Steps where an Euler iterate increased the loss.
    pub loss_increases: usize,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.t).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.loss).collect()
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("trajectory has a checkpoint")
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Guard {
    bound: Option<f64>,
}

impl Guard {
    fn check(&self, step: usize, loss: f64, theta: &[f64]) -> Result<()> {
        if !loss.is_finite() || loss.abs() > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                step,
                quantity: "loss",
                value: loss,
            });
        }
        let n = norm(theta);
        if !n.is_finite() || n > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                step,
                quantity: "|theta|",
                value: n,
            });
        }
        if let Some(bound) = self.bound {
            if n > bound {
                return Err(Error::TrajectoryBound {
                    step,
                    norm: n,
                    bound,
                });
            }
        }
        Ok(())
    }
}

fn eval<O: Objective>(obj: &O, step: usize, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
    obj.value_and_grad(theta, grad).map_err(|e| match e {
        Error::Divergence {
            quantity, value, ..
        } => Error::Divergence {
            step,
            quantity,
            value,
        },
        other => other,
    })
}

/// Integrates `d theta / dt = -grad L` (or runs Adam) from `theta0`.
pub fn integrate<O: Objective>(
    obj: &O,
    theta0: &[f64],
    config: &FlowConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let n = obj.dim();
    if theta0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: theta0.len(),
        });
    }
    let guard = Guard {
        bound: config.bound,
    };
    let dt = config.step;
    let total = config.steps;
    let mut theta = theta0.to_vec();
    let mut grad = vec![0.0; n];
    let mut record = TrajectoryRecord {
        config: *config,
        checkpoints: Vec::with_capacity(total / config.stride + 2),
        trivial: false,
        loss_increases: 0,
    };
    let mut prev_loss = f64::INFINITY;

    // rk4 stage buffers
    let mut stage = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut slope = vec![0.0; n];
    let mut stage_grad = vec![0.0; n];
    // adam state
    let mut m1 = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut prev_theta: Option<Vec<f64>> = None;
    let mut pending: Option<(usize, Option<Vec<f64>>)> = None;

    for k in 0..=total {
        let loss = eval(obj, k, &theta, &mut grad)?;
        guard.check(k, loss, &theta)?;
        if k == 0 && grad.iter().all(|&g| g == 0.0) {
            record.trivial = true;
            log::warn!("zero gradient at theta_0: trivial dynamics");
        }
        if config.integrator == Integrator::GradientFlowEuler && loss > prev_loss {
            if record.loss_increases == 0 {
                log::warn!("loss increased at step {k}; step size {dt} may exceed the stability limit");
            }
            record.loss_increases += 1;
        }
        prev_loss = loss;

        if k % config.stride == 0 || k == total {
            let dtheta = match config.integrator {
                Integrator::Adam => {
                    pending = Some((record.checkpoints.len(), prev_theta.clone()));
                    vec![0.0; n]
                }
                _ => grad.iter().map(|g| -g).collect(),
            };
            record.checkpoints.push(Checkpoint {
                step: k,
                t: k as f64 * dt,
                loss,
                theta: theta.clone(),
                grad: grad.clone(),
                dtheta,
            });
        }
        if k == total {
            break;
        }

        match config.integrator {
            Integrator::GradientFlowEuler => {
                for (p, g) in theta.iter_mut().zip(&grad) {
                    *p -= dt * g;
                }
            }
            Integrator::GradientFlowRk4 => {
                // acc = k1 + 2 k2 + 2 k3 + k4 with k_i = -grad L at each stage
                for ((a, s), g) in acc.iter_mut().zip(slope.iter_mut()).zip(&grad) {
                    *a = -g;
                    *s = -g;
                }
                for (frac, weight) in [(0.5, 2.0), (0.5, 2.0), (1.0, 1.0)] {
                    for ((st, p), s) in stage.iter_mut().zip(&theta).zip(&slope) {
                        *st = p + frac * dt * s;
                    }
                    eval(obj, k, &stage, &mut stage_grad)?;
                    for ((a, s), g) in acc.iter_mut().zip(slope.iter_mut()).zip(&stage_grad) {
                        *s = -g;
                        *a += weight * *s;
                    }
                }
                for (p, a) in theta.iter_mut().zip(&acc) {
                    *p += dt / 6.0 * a;
                }
            }
            Integrator::Adam => {
                let kk = (k + 1) as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(kk);
                let c2 = 1.0 - ADAM_BETA2.powi(kk);
                prev_theta = Some(theta.clone());
                for i in 0..n {
                    let g = grad[i];
                    m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * g;
                    m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * g * g;
                    let mhat = m1[i] / c1;
                    let vhat = m2[i] / c2;
                    theta[i] -= dt * mhat / (vhat.sqrt() + ADAM_EPSILON);
                }
                if let Some((idx, before)) = pending.take() {
                    let cp = &mut record.checkpoints[idx];
                    match before {
                        Some(before) => {
                            for i in 0..n {
                                cp.dtheta[i] = (theta[i] - before[i]) / (2.0 * dt);
                            }
                        }
                        None => {
                            for i in 0..n {
                                cp.dtheta[i] = (theta[i] - cp.theta[i]) / dt;
                            }
                        }
                    }
                }
            }
        }
    }

    if let Some((idx, Some(before))) = pending.take() {
        let cp = &mut record.checkpoints[idx];
        for i in 0..n {
            cp.dtheta[i] = (cp.theta[i] - before[i]) / dt;
        }
    }
    Ok(record)
}
