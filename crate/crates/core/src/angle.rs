use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AngleError, Result};

/// Slack allowed when constructing an angle from a computed value; values
/// within this distance of `[0, pi]` are snapped onto the interval.
const SNAP_TOL: f64 = 1e-12;

/// An angle in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AngleRadians(f64);

impl AngleRadians {
    pub const ZERO: AngleRadians = AngleRadians(0.0);
    pub const RIGHT: AngleRadians = AngleRadians(PI / 2.0);
    pub const PI: AngleRadians = AngleRadians(PI);

    pub fn new(value: f64) -> Result<Self> {
        if !(-SNAP_TOL..=PI + SNAP_TOL).contains(&value) {
            return Err(AngleError::AngleOutOfRange(value));
        }
        Ok(AngleRadians(value.clamp(0.0, PI)))
    }

    /// Angle whose cosine is `ratio`, clamping the ratio into `[-1, 1]` first.
    pub fn from_cos(ratio: f64) -> Self {
        if ratio.is_nan() {
            return AngleRadians(0.0);
        }
        AngleRadians(ratio.clamp(-1.0, 1.0).acos())
    }

    /// Clamps an arbitrary real into `[0, pi]`.
    pub fn saturating(value: f64) -> Self {
        AngleRadians(if value.is_nan() {
            PI
        } else {
            value.clamp(0.0, PI)
        })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// `pi - self`, the angle obtained by flipping the sign of one operand.
    pub fn supplement(self) -> Self {
        AngleRadians(PI - self.0)
    }
}

impl TryFrom<f64> for AngleRadians {
    type Error = AngleError;

    fn try_from(value: f64) -> Result<Self> {
        AngleRadians::new(value)
    }
}

impl From<AngleRadians> for f64 {
    fn from(a: AngleRadians) -> f64 {
        a.0
    }
}

impl fmt::Display for AngleRadians {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_enforces_range() {
        assert!(AngleRadians::new(-0.1).is_err());
        assert!(AngleRadians::new(PI + 0.1).is_err());
        assert!(AngleRadians::new(f64::NAN).is_err());
        assert_eq!(AngleRadians::new(PI + 1e-14).unwrap().value(), PI);
        assert_eq!(AngleRadians::new(1.0).unwrap().value(), 1.0);
    }

    #[test]
    fn from_cos_clamps_overshoot() {
        assert_eq!(AngleRadians::from_cos(1.0 + 1e-15).value(), 0.0);
        assert_eq!(AngleRadians::from_cos(-1.0 - 1e-15).value(), PI);
        assert!((AngleRadians::from_cos(0.0).value() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn serde_rejects_out_of_range() {
        assert!(serde_json::from_str::<AngleRadians>("4.0").is_err());
        let a: AngleRadians = serde_json::from_str("0.5").unwrap();
        assert_eq!(a.value(), 0.5);
    }
}
