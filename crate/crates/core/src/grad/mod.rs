//! Reverse-mode gradients of the network output and of both loss families,
//! plus a central-difference checker.

mod backprop;
mod fd;
mod loss;

pub use backprop::{grad_output, output_gradient_into, GradWorkspace};
pub use fd::{fd_check, fd_check_loss, fd_check_output, FdReport, FD_STEP};
pub use loss::{grad_loss, LossData, LossObjective, MeasureKind};

use serde::{Deserialize, Serialize};

/// Pointwise loss `l(z)` applied to the residual `z = h - f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    /// `l(z) = |z|^p`.
    Power { p: f64 },
}

impl LossKind {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            LossKind::Mse => z * z,
            LossKind::Power { p } => z.abs().powf(p),
        }
    }

    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            LossKind::Mse => 2.0 * z,
            LossKind::Power { p } => {
                if z == 0.0 {
                    0.0
                } else {
                    p * z.abs().powf(p - 1.0) * z.signum()
                }
            }
        }
    }

    pub fn is_mse(self) -> bool {
        matches!(self, LossKind::Mse)
    }

    pub fn describe(self) -> String {
        match self {
            LossKind::Mse => "mse".into(),
            LossKind::Power { p } => format!("power(p={p})"),
        }
    }

    /// Numeric check of `C^-1 l'(z)^2 <= l(z) <= C |z|^2` for
    /// `1e-6 <= |z| <= r0` on a log-spaced scan.
    pub fn sandwich_check(self, r0: f64) -> SandwichReport {
        const SCAN: usize = 601;
        const Z_MIN: f64 = 1e-6;
        let ratios = |z: f64| {
            let l = self.value(z);
            let d = self.deriv(z);
            (d * d / l, l / (z * z))
        };
        let (lz_min, lz_max) = (Z_MIN.ln(), r0.max(Z_MIN).ln());
        let mut lower_sup: f64 = 0.0;
        let mut upper_sup: f64 = 0.0;
        let mut finite = true;
        for i in 0..SCAN {
            let mag = (lz_min + (lz_max - lz_min) * i as f64 / (SCAN - 1) as f64).exp();
            for z in [mag, -mag] {
                let (lo, up) = ratios(z);
                finite &= lo.is_finite() && up.is_finite();
                lower_sup = lower_sup.max(lo);
                upper_sup = upper_sup.max(up);
            }
        }
        // a ratio still growing as z -> 0 has no finite bound
        let (lo_a, up_a) = ratios(Z_MIN);
        let (lo_b, up_b) = ratios(10.0 * Z_MIN);
        let bounded_near_zero = lo_a <= 1.01 * lo_b && up_a <= 1.01 * up_b;
        let twice_differentiable = match self {
            LossKind::Mse => true,
            LossKind::Power { p } => p >= 2.0,
        };
        let passed = finite && bounded_near_zero && twice_differentiable && r0 > 0.0;
        SandwichReport {
            r0,
            constant: lower_sup.max(upper_sup).max(1.0),
            lower_ratio_sup: lower_sup,
            upper_ratio_sup: upper_sup,
            bounded_near_zero,
            twice_differentiable,
            passed,
        }
    }
}

/// Outcome of [`LossKind::sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub r0: f64,
    /// Smallest `C >= 1` covering both sides on the scan.
    pub constant: f64,
    /// `sup l'(z)^2 / l(z)`.
    pub lower_ratio_sup: f64,
    /// `sup l(z) / z^2`.
    pub upper_ratio_sup: f64,
    pub bounded_near_zero: bool,
    pub twice_differentiable: bool,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_two_is_mse() {
        let p2 = LossKind::Power { p: 2.0 };
        for z in [-3.0, -0.25, 0.0, 1e-9, 2.5] {
            assert_eq!(p2.value(z), LossKind::Mse.value(z));
            assert_eq!(p2.deriv(z), LossKind::Mse.deriv(z));
        }
    }

    #[test]
    fn power_derivative() {
        let p4 = LossKind::Power { p: 4.0 };
        let r: f64 = -0.7;
        assert!((p4.deriv(r) - 4.0 * r.powi(3)).abs() < 1e-15);
        assert_eq!(p4.deriv(0.0), 0.0);
    }

    #[test]
    fn sandwich_constants() {
        let mse = LossKind::Mse.sandwich_check(1.0);
        assert!(mse.passed);
        assert!((mse.constant - 4.0).abs() < 1e-12);

        let p4 = LossKind::Power { p: 4.0 }.sandwich_check(1.0);
        assert!(p4.passed);
        // l'^2 / l = 16 z^2 peaks at r0
        assert!((p4.lower_ratio_sup - 16.0).abs() < 1e-9);
        assert!((p4.upper_ratio_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sub_quadratic_power_fails() {
        let r = LossKind::Power { p: 1.5 }.sandwich_check(1.0);
        assert!(!r.passed);
        assert!(!r.bounded_near_zero);
        assert!(!r.twice_differentiable);
        // l'^2/l = 2.25 |z|^-1/2 reaches 2250 at 1e-6
        assert!((r.lower_ratio_sup - 2250.0).abs() < 1e-6);
    }
}
