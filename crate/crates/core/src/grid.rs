//! Explicit sampling grids for the theorem checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default density of logarithmic grids.
pub const POINTS_PER_DECADE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// A one-dimensional grid on `[lo, hi]` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec {
            lo,
            hi,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
        }
    }

    /// Log grid with `per_decade` points in each factor of ten.
    pub fn log_per_decade(lo: f64, hi: f64, per_decade: usize) -> Self {
        let decades = (hi / lo).log10().max(0.0);
        let points = (decades * per_decade as f64).round() as usize + 1;
        GridSpec::log(lo, hi, points.max(2))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::invalid(format!("grid bounds [{}, {}]", self.lo, self.hi)));
        }
        if self.points == 0 {
            return Err(Error::invalid("grid needs at least one point"));
        }
        if self.spacing == Spacing::Log && self.lo <= 0.0 {
            return Err(Error::invalid("log grid needs a positive lower bound"));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let last = (self.points - 1) as f64;
        let nodes = (0..self.points)
            .map(|i| {
                let frac = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.lo + (self.hi - self.lo) * frac,
                    Spacing::Log => self.lo * (self.hi / self.lo).powf(frac),
                }
            })
            .collect::<Vec<_>>();
        Ok(nodes)
    }

    pub fn describe(&self) -> String {
        let kind = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        format!("{kind} grid on [{}, {}] with {} points", self.lo, self.hi, self.points)
    }
}
