//! Parsers for the structured flag values.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parameter a sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Eta,
    G,
    EAvg,
    ELim,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::G => "g",
            Self::EAvg => "e_avg",
            Self::ELim => "e_lim",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eta" => Ok(Self::Eta),
            "g" => Ok(Self::G),
            "e_avg" | "e-avg" => Ok(Self::EAvg),
            "e_lim" | "e-lim" => Ok(Self::ELim),
            other => Err(Error::Parse(format!(
                "unknown sweep variable {other:?} (expected eta, g, e_avg or e_lim)"
            ))),
        }
    }
}

/// Inclusive arithmetic range `var:start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Sweeps longer than this are rejected as a likely typo.
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

impl SweepSpec {
    /// `start + k step` for every `k` that does not pass `stop` (with a small
    /// allowance so that decimal steps land on `stop`).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [var, start, stop, step] = parts[..] else {
            return Err(Error::Parse(format!(
                "sweep must look like var:start:stop:step, got {s:?}"
            )));
        };
        let num = |name: &str, v: &str| -> Result<f64> {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("sweep {name} {v:?} is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Parse(format!("sweep {name} must be finite, got {v:?}")))
            }
        };
        let spec = Self {
            var: var.parse()?,
            start: num("start", start)?,
            stop: num("stop", stop)?,
            step: num("step", step)?,
        };
        if spec.step <= 0.0 {
            return Err(Error::Parse(format!("sweep step must be > 0, got {}", spec.step)));
        }
        if spec.stop < spec.start {
            return Err(Error::Parse(format!(
                "sweep range is empty: stop {} is below start {}",
                spec.stop, spec.start
            )));
        }
        let points = (spec.stop - spec.start) / spec.step;
        if points >= MAX_SWEEP_POINTS as f64 {
            return Err(Error::Parse(format!(
                "sweep has more than {MAX_SWEEP_POINTS} points; increase the step"
            )));
        }
        Ok(spec)
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.var.name(), self.start, self.stop, self.step)
    }
}

/// `NxM` grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

/// Largest accepted grid side.
pub const MAX_GRID_SIDE: usize = 100_000;

impl FromStr for GridDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Parse(format!("grid must look like NxM, got {s:?}")))?;
        let side = |v: &str| -> Result<usize> {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("grid size {v:?} is not a positive integer")))?;
            if n == 0 || n > MAX_GRID_SIDE {
                return Err(Error::Parse(format!(
                    "grid size must be in 1..={MAX_GRID_SIDE}, got {n}"
                )));
            }
            Ok(n)
        };
        Ok(Self {
            rows: side(a)?,
            cols: side(b)?,
        })
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Comma-separated per-block overheads.
pub fn parse_g_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(Error::Parse("g-list is empty".into()));
    }
    s.split(',')
        .enumerate()
        .map(|(i, v)| {
            let g: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("g-list entry {} ({v:?}) is not a number", i + 1)))?;
            if !g.is_finite() || g < 0.0 {
                return Err(Error::Parse(format!(
                    "g-list entry {} must be finite and >= 0, got {v:?}",
                    i + 1
                )));
            }
            Ok(g)
        })
        .collect()
}
