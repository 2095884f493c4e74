//! Decoder energy per channel use as a function of the inverse capacity gap
//! `theta = C / (C - R)`.
//!
//! Every model must vanish at `theta = 1`, be nondecreasing and convex, and
//! grow without bound. Solvers consume the derivative directly, so models
//! provide it in closed form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::roots;

pub trait DecoderEnergy: Send + Sync {
    /// Energy at `theta`. Only meaningful for `theta >= 1`.
    fn energy(&self, theta: f64) -> f64;

    /// d energy / d theta. Only meaningful for `theta >= 1`.
    fn derivative(&self, theta: f64) -> f64;

    fn name(&self) -> String;

    fn evaluate(&self, theta: f64) -> Result<f64> {
        check_theta("evaluate", theta)?;
        Ok(self.energy(theta))
    }

    fn evaluate_derivative(&self, theta: f64) -> Result<f64> {
        check_theta("derivative", theta)?;
        Ok(self.derivative(theta))
    }
}

impl<T: DecoderEnergy + ?Sized> DecoderEnergy for &T {
    fn energy(&self, theta: f64) -> f64 {
        (**self).energy(theta)
    }
    fn derivative(&self, theta: f64) -> f64 {
        (**self).derivative(theta)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

fn check_theta(operation: &'static str, theta: f64) -> Result<()> {
    if theta.is_finite() && theta >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            operation,
            name: "theta",
            value: theta,
        })
    }
}

/// Built-in decoder energy curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderEnergyModel {
    /// `theta * log2(theta)`, the LDPC-style complexity curve.
    ThetaLogTheta,
    /// `c * (theta - 1)^p` with `c > 0`, `p >= 1`.
    PowerLaw { c: f64, p: f64 },
}

pub fn theta_log_theta_model() -> DecoderEnergyModel {
    DecoderEnergyModel::ThetaLogTheta
}

pub fn power_law_model(c: f64, p: f64) -> Result<DecoderEnergyModel> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Parse(format!("power-law coefficient c must be > 0, got {c}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Parse(format!("power-law exponent p must be >= 1, got {p}")));
    }
    Ok(DecoderEnergyModel::PowerLaw { c, p })
}

impl DecoderEnergy for DecoderEnergyModel {
    fn energy(&self, theta: f64) -> f64 {
        match *self {
            Self::ThetaLogTheta => {
                if theta < 1.0 {
                    f64::NAN
                } else {
                    theta * theta.log2()
                }
            }
            Self::PowerLaw { c, p } => {
                if theta < 1.0 {
                    f64::NAN
                } else {
                    c * (theta - 1.0).powf(p)
                }
            }
        }
    }

    fn derivative(&self, theta: f64) -> f64 {
        match *self {
            Self::ThetaLogTheta => {
                if theta < 1.0 {
                    f64::NAN
                } else {
                    theta.log2() + std::f64::consts::LOG2_E
                }
            }
            Self::PowerLaw { c, p } => {
                if theta < 1.0 {
                    f64::NAN
                } else if p == 1.0 {
                    c
                } else {
                    c * p * (theta - 1.0).powf(p - 1.0)
                }
            }
        }
    }

    fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DecoderEnergyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ThetaLogTheta => f.write_str("theta-log-theta"),
            Self::PowerLaw { c, p } => write!(f, "power-law:c={c},p={p}"),
        }
    }
}

/// Parses `theta-log-theta` or `power-law:c=<c>,p=<p>` (keys in any order).
impl FromStr for DecoderEnergyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "theta-log-theta" {
            return Ok(Self::ThetaLogTheta);
        }
        let Some(rest) = s.strip_prefix("power-law:") else {
            return Err(Error::Parse(format!(
                "unknown decoder energy model {s:?} (expected theta-log-theta or power-law:c=..,p=..)"
            )));
        };
        let mut c = None;
        let mut p = None;
        for field in rest.split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {value:?} for {key}")))?;
            let slot = match key.trim() {
                "c" => &mut c,
                "p" => &mut p,
                other => return Err(Error::Parse(format!("unknown power-law key {other:?}"))),
            };
            if slot.replace(value).is_some() {
                return Err(Error::Parse(format!("duplicate power-law key {key:?}")));
            }
        }
        match (c, p) {
            (Some(c), Some(p)) => power_law_model(c, p),
            _ => Err(Error::Parse("power-law needs both c and p".into())),
        }
    }
}

/// Smallest `theta >= 1` with `energy(theta) = target`.
pub fn inverse_energy<M: DecoderEnergy + ?Sized>(model: &M, target: f64) -> Result<f64> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::Domain {
            operation: "inverse_energy",
            name: "target",
            value: target,
        });
    }
    if target == 0.0 {
        return Ok(1.0);
    }
    let gap = |theta: f64| target - model.energy(theta);
    let hi = roots::expand_upper(&gap, 2.0, roots::THETA_LIMIT, "inverse decoder energy")?;
    Ok(roots::bisect_decreasing(&gap, 1.0, hi))
}
