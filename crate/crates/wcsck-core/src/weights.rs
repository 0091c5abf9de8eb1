//! Positive weight functions on the polytope and the log-concavity certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;

/// A weight preset on a one-dimensional polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `c`.
    Constant { c: f64 },
    /// `scale * exp(a y)`.
    Exponential {
        a: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `sum_k coeffs[k] y^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(-(y - center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// `cosh(k (y - center))`, log-convex.
    Cosh { k: f64, center: f64 },
}

fn one() -> f64 {
    1.0
}

/// Value and first two derivatives of a weight at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Weight {
    pub fn unit() -> Self {
        Weight::Constant { c: 1.0 }
    }

    pub fn exponential(a: f64) -> Self {
        Weight::Exponential { a, scale: 1.0 }
    }

    pub fn jet(&self, y: f64) -> Jet {
        match self {
            Weight::Constant { c } => Jet { value: *c, d1: 0.0, d2: 0.0 },
            Weight::Exponential { a, scale } => {
                let e = scale * (a * y).exp();
                Jet { value: e, d1: a * e, d2: a * a * e }
            }
            Weight::Polynomial { coeffs } => {
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    ddp = ddp * y + 2.0 * dp;
                    dp = dp * y + p;
                    p = p * y + c;
                }
                Jet { value: p, d1: dp, d2: ddp }
            }
            Weight::Gaussian { center, width } => {
                let z = (y - center) / (width * width);
                let e = (-0.5 * (y - center).powi(2) / (width * width)).exp();
                Jet { value: e, d1: -z * e, d2: (z * z - 1.0 / (width * width)) * e }
            }
            Weight::Cosh { k, center } => {
                let u = k * (y - center);
                Jet { value: u.cosh(), d1: k * u.sinh(), d2: k * k * u.cosh() }
            }
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.jet(y).value
    }

    /// `v''/v - (v'/v)^2`, the one-dimensional log-Hessian.
    pub fn log_hessian(&self, y: f64) -> f64 {
        let j = self.jet(y);
        j.d2 / j.value - (j.d1 / j.value).powi(2)
    }

    /// Positivity on the closed polytope, probed on a fine sample.
    pub fn validate(&self, polytope: &Polytope) -> Result<()> {
        match self {
            Weight::Constant { c } if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidInput(format!("constant weight must be positive, got {c}")))
            }
            Weight::Exponential { scale, .. } if !(*scale > 0.0) => {
                return Err(Error::InvalidInput(format!("exponential scale must be positive, got {scale}")))
            }
            Weight::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(Error::InvalidInput(format!("gaussian width must be positive, got {width}")))
            }
            Weight::Polynomial { coeffs } if coeffs.is_empty() => {
                return Err(Error::InvalidInput("polynomial weight needs coefficients".into()))
            }
            _ => {}
        }
        for y in polytope.samples(1001) {
            let v = self.value(y);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("weight not positive at y = {y}: {v}")));
            }
        }
        Ok(())
    }

    pub fn preset_name(&self) -> &'static str {
        match self {
            Weight::Constant { .. } => "constant",
            Weight::Exponential { .. } => "exponential",
            Weight::Polynomial { .. } => "polynomial",
            Weight::Gaussian { .. } => "gaussian",
            Weight::Cosh { .. } => "cosh",
        }
    }
}

/// Outcome of probing `v''/v - (v'/v)^2 <= 0` on the polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LogConcavity {
    Certified { samples: usize, max_log_hessian: f64 },
    Refused { y: f64, log_hessian: f64 },
}

impl LogConcavity {
    pub fn is_certified(&self) -> bool {
        matches!(self, LogConcavity::Certified { .. })
    }
}

/// Number of probe points used by the certificate.
pub const CERTIFICATE_SAMPLES: usize = 101;
const CERTIFICATE_TOL: f64 = 1e-12;

/// Probe the log-concavity of `weight` on the polytope; the first violating point is reported.
pub fn certify_log_concave(weight: &Weight, polytope: &Polytope) -> LogConcavity {
    let mut worst = f64::NEG_INFINITY;
    for y in polytope.samples(CERTIFICATE_SAMPLES) {
        let q = weight.log_hessian(y);
        if q > CERTIFICATE_TOL * (1.0 + weight.jet(y).d2.abs() / weight.value(y)) {
            return LogConcavity::Refused { y, log_hessian: q };
        }
        worst = worst.max(q);
    }
    LogConcavity::Certified { samples: CERTIFICATE_SAMPLES, max_log_hessian: worst }
}

/// The pair `(v, w)` with a log-concavity certificate for `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub v: Weight,
    pub w: Weight,
    pub log_concave: LogConcavity,
}

impl WeightPair {
    pub fn new(v: Weight, w: Weight, polytope: &Polytope) -> Result<Self> {
        v.validate(polytope)?;
        w.validate(polytope)?;
        let log_concave = certify_log_concave(&v, polytope);
        Ok(Self { v, w, log_concave })
    }

    pub fn unit() -> Self {
        Self::new(Weight::unit(), Weight::unit(), &Polytope::unit()).expect("unit weights are valid")
    }

    /// `v = w = exp(a y)` on the unit interval.
    pub fn exponential(a: f64) -> Self {
        Self::new(Weight::exponential(a), Weight::exponential(a), &Polytope::unit()).expect("exponential weights are valid")
    }

    /// Constant `C` with `|2(v'/v)^2 - v''/v| <= C` on the polytope.
    pub fn xi_pair_constant(&self, polytope: &Polytope) -> f64 {
        polytope
            .samples(1001)
            .into_iter()
            .map(|y| {
                let j = self.v.jet(y);
                (2.0 * (j.d1 / j.value).powi(2) - j.d2 / j.value).abs()
            })
            .fold(0.0, f64::max)
    }
}
