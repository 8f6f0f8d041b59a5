use serde::{Deserialize, Serialize};

use super::Smoothness;
use crate::error::{Error, Result};

/// Shape of the 0 -> 1 transition of a bump function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `6s^5 - 15s^4 + 10s^3`: C^2, with bounded third derivative.
    #[default]
    SmoothstepQuintic,
    /// `g(s) / (g(s) + g(1-s))` with `g(s) = exp(-1/s)`: C^infinity.
    SmoothExp,
}

impl BumpProfile {
    /// Monotone step on `[0, 1]` with `step(0) = 0`, `step(1) = 1`.
    pub fn step(self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        match self {
            BumpProfile::SmoothstepQuintic => s * s * s * (s * (6.0 * s - 15.0) + 10.0),
            BumpProfile::SmoothExp => {
                let g = |u: f64| (-1.0 / u).exp();
                let (a, b) = (g(s), g(1.0 - s));
                a / (a + b)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BumpProfile::SmoothstepQuintic => "smoothstep_quintic",
            BumpProfile::SmoothExp => "smooth_exp",
        }
    }

    pub fn smoothness(self) -> Smoothness {
        match self {
            BumpProfile::SmoothstepQuintic => Smoothness::Finite(3),
            BumpProfile::SmoothExp => Smoothness::Infinite,
        }
    }
}

/// Cut-off `chi` with `chi = 1` on `[a, b]` and `chi = 0` outside `(a', b')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    inner: (f64, f64),
    outer: (f64, f64),
    #[serde(default)]
    profile: BumpProfile,
}

impl BumpFunction {
    pub fn new(inner: (f64, f64), outer: (f64, f64), profile: BumpProfile) -> Result<Self> {
        let ok = [inner.0, inner.1, outer.0, outer.1].iter().all(|v| v.is_finite())
            && outer.0 < inner.0
            && inner.0 < inner.1
            && inner.1 < outer.1;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "bump needs a' < a < b < b', got inner {inner:?} outer {outer:?}"
            )));
        }
        Ok(BumpFunction {
            inner,
            outer,
            profile,
        })
    }

    pub fn inner(&self) -> (f64, f64) {
        self.inner
    }

    pub fn outer(&self) -> (f64, f64) {
        self.outer
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.inner;
        let (lo, hi) = self.outer;
        if x >= a && x <= b {
            1.0
        } else if x <= lo || x >= hi {
            0.0
        } else if x < a {
            self.profile.step((x - lo) / (a - lo))
        } else {
            self.profile.step((hi - x) / (hi - b))
        }
    }

    /// Tensor-product extension to `R^d`.
    pub fn eval_point(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.eval(xi)).product()
    }
}
