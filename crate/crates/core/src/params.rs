use std::fmt;

use crate::error::{Error, Result};

/// Link constants for one block. Energies are per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// RF-to-DC conversion efficiency in (0, 1].
    pub eta: f64,
    /// Non-decoding receiver energy net of ambient harvesting.
    pub g: f64,
    /// Average transmit energy budget.
    pub e_avg: f64,
    /// Peak transmit energy.
    pub e_lim: f64,
    /// Channel uses per block. Only scales reported bit counts.
    pub n: u64,
}

impl SystemParams {
    pub fn new(eta: f64, g: f64, e_avg: f64, e_lim: f64) -> Result<Self> {
        let p = Self {
            eta,
            g,
            e_avg,
            e_lim,
            n: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_n(mut self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be a positive integer".into()));
        }
        self.n = n;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("eta", self.eta),
            ("g", self.g),
            ("e_avg", self.e_avg),
            ("e_lim", self.e_lim),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.g < 0.0 {
            return bad(format!("g must be >= 0, got {}", self.g));
        }
        if self.e_avg < 0.0 {
            return bad(format!("e_avg must be >= 0, got {}", self.e_avg));
        }
        if self.e_avg >= self.e_lim {
            return bad(format!(
                "e_avg ({}) must be strictly below e_lim ({})",
                self.e_avg, self.e_lim
            ));
        }
        if self.budget() < 0.0 {
            return bad(format!(
                "eta * e_avg - g must be >= 0 (got {} * {} - {} = {}); raise e_avg or lower g",
                self.eta,
                self.e_avg,
                self.g,
                self.budget()
            ));
        }
        if self.n == 0 {
            return bad("n must be a positive integer".into());
        }
        Ok(())
    }

    /// Copy with a different overhead `g`, skipping validation. Used for the
    /// per-block subproblems of the multi-block solver, where `g + T` may be
    /// negative; the budget is clamped at zero.
    pub(crate) fn with_effective_g(&self, g: f64) -> Self {
        Self {
            g: g.min(self.eta * self.e_avg),
            ..*self
        }
    }

    /// `eta * e_avg - g`: harvested energy left for decoding.
    pub fn budget(&self) -> f64 {
        self.eta * self.e_avg - self.g
    }

    /// `e_lim - e_avg`.
    pub(crate) fn headroom(&self) -> f64 {
        self.e_lim - self.e_avg
    }

    /// `eta * e_lim - g`.
    pub(crate) fn peak_budget(&self) -> f64 {
        self.eta * self.e_lim - self.g
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eta={} g={} e_avg={} e_lim={} n={}",
            self.eta, self.g, self.e_avg, self.e_lim, self.n
        )
    }
}
