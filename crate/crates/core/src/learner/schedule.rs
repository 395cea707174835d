use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power-law stepsize `η(t) = a / (t + t_0)^μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct StepsizeSchedule {
    scale: f64,
    offset: f64,
    exponent: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    scale: f64,
    offset: f64,
    exponent: f64,
}

impl TryFrom<RawSchedule> for StepsizeSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        StepsizeSchedule::new(raw.scale, raw.offset, raw.exponent)
    }
}

impl From<StepsizeSchedule> for RawSchedule {
    fn from(s: StepsizeSchedule) -> Self {
        RawSchedule {
            scale: s.scale,
            offset: s.offset,
            exponent: s.exponent,
        }
    }
}

impl StepsizeSchedule {
    /// Requires `0.5 < μ ≤ 1` and `η(0) < 1`, which make the sequence
    /// strictly decreasing, non-summable and square-summable.
    pub fn new(scale: f64, offset: f64, exponent: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("schedule.scale", format!("must be > 0, got {scale}")));
        }
        if !(offset.is_finite() && offset > 0.0) {
            return Err(Error::invalid("schedule.offset", format!("must be > 0, got {offset}")));
        }
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::invalid(
                "schedule.exponent",
                format!("must lie in (0.5, 1], got {exponent}"),
            ));
        }
        let first = scale / offset.powf(exponent);
        if first >= 1.0 {
            return Err(Error::invalid(
                "schedule",
                format!("initial stepsize {first} must be < 1"),
            ));
        }
        Ok(Self {
            scale,
            offset,
            exponent,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    #[inline]
    pub fn stepsize(&self, t: u64) -> f64 {
        let base = t as f64 + self.offset;
        if self.exponent == 1.0 {
            self.scale / base
        } else {
            self.scale / base.powf(self.exponent)
        }
    }
}

impl Default for StepsizeSchedule {
    /// `η(t) = 1/(t + 100)`.
    fn default() -> Self {
        Self {
            scale: 1.0,
            offset: 100.0,
            exponent: 1.0,
        }
    }
}
