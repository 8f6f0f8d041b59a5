use super::{grad_loss, grad_output, GradWorkspace, LossData, LossKind};
use crate::error::Result;
use crate::nnet::{forward_into, BumpFunction, NetworkSpec, Theta};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Below this gradient scale the comparison falls back to absolute error.
const ZERO_GRADIENT: f64 = 1e-12;

/// Worst-coordinate disagreement between an analytic gradient and central
/// differences.
///
/// Coordinate `i` is scored `|a_i - n_i| / max(|a_i|, |n_i|, 1e-3 s)` where
/// `s` is the largest gradient entry, so near-zero entries of an otherwise
/// large gradient do not turn rounding noise into huge relative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub max_error: f64,
    pub worst_index: usize,
    /// Set when the whole gradient vanishes and `max_error` is absolute.
    pub absolute: bool,
}

pub fn fd_check(f: impl Fn(&[f64]) -> f64, theta: &[f64], analytic: &[f64]) -> FdReport {
    assert_eq!(theta.len(), analytic.len());
    let mut probe = theta.to_vec();
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + FD_STEP;
            let up = f(&probe);
            probe[i] = orig - FD_STEP;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect();
    let scale = analytic
        .iter()
        .chain(&numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let absolute = scale < ZERO_GRADIENT;
    let floor = 1e-3 * scale;
    let mut report = FdReport {
        max_error: 0.0,
        worst_index: 0,
        absolute,
    };
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let diff = (a - n).abs();
        let err = if absolute {
            diff
        } else {
            diff / a.abs().max(n.abs()).max(floor)
        };
        if err > report.max_error {
            report.max_error = err;
            report.worst_index = i;
        }
    }
    report
}

pub fn fd_check_output(
    spec: &NetworkSpec,
    theta: &Theta,
    x: &[f64],
    chi: Option<&BumpFunction>,
) -> Result<FdReport> {
    let analytic = grad_output(spec, theta, x, chi)?;
    let weight = chi.map_or(1.0, |c| c.eval_point(x));
    let ws = std::cell::RefCell::new(GradWorkspace::new(spec));
    Ok(fd_check(
        |p| forward_into(&mut ws.borrow_mut().cache, p, x).expect("layout checked") * weight,
        theta.as_slice(),
        &analytic,
    ))
}

pub fn fd_check_loss(
    spec: &NetworkSpec,
    theta: &Theta,
    loss: LossKind,
    data: &LossData,
) -> Result<FdReport> {
    let (_, analytic) = grad_loss(spec, theta, loss, data)?;
    let ws = std::cell::RefCell::new(GradWorkspace::new(spec));
    Ok(fd_check(
        |p| data.value(&mut ws.borrow_mut(), loss, p).expect("layout checked"),
        theta.as_slice(),
        &analytic,
    ))
}
