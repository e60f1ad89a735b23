//! Named scalar maps for static nonlinearities.

use serde::{Deserialize, Serialize};

use crate::error::{AngleError, Result};
use crate::lti::SectorBound;

/// Registry of scalar functions `f: R -> R` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", content = "params", rename_all = "snake_case")]
pub enum ScalarFn {
    /// `k x`
    Gain { k: f64 },
    /// `a x + (b - a) clamp(x, -level, level)`: slope `b` near zero, `a` far out.
    Saturation { a: f64, b: f64, level: f64 },
    /// `b x - (b - a) clamp(x, -width, width)`: slope `a` inside the dead band, `b` outside.
    DeadzoneGain { a: f64, b: f64, width: f64 },
    /// `k x^3`
    Cubic { k: f64 },
    /// `a x + (b - a) tanh(k x) / k`
    TanhScaled { a: f64, b: f64, k: f64 },
    /// `x (a + (b - a) (1 + sin(freq x + phase)) / 2)`, wanders over the whole sector.
    SectorModulated {
        a: f64,
        b: f64,
        freq: f64,
        phase: f64,
    },
}

impl ScalarFn {
    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, what: &str| {
            if cond {
                Ok(())
            } else {
                Err(AngleError::InvalidArgument(format!("{what} in {self:?}")))
            }
        };
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            ScalarFn::Gain { k } | ScalarFn::Cubic { k } => {
                ok(finite(&[k]), "non-finite parameter")
            }
            ScalarFn::Saturation { a, b, level } => {
                ok(finite(&[a, b, level]), "non-finite parameter")?;
                ok(level > 0.0, "saturation level must be > 0")
            }
            ScalarFn::DeadzoneGain { a, b, width } => {
                ok(finite(&[a, b, width]), "non-finite parameter")?;
                ok(width > 0.0, "dead-band width must be > 0")
            }
            ScalarFn::TanhScaled { a, b, k } => {
                ok(finite(&[a, b, k]), "non-finite parameter")?;
                ok(k > 0.0, "tanh scale must be > 0")
            }
            ScalarFn::SectorModulated { a, b, freq, phase } => {
                ok(finite(&[a, b, freq, phase]), "non-finite parameter")
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Gain { k } => k * x,
            ScalarFn::Saturation { a, b, level } => a * x + (b - a) * x.clamp(-level, level),
            ScalarFn::DeadzoneGain { a, b, width } => b * x - (b - a) * x.clamp(-width, width),
            ScalarFn::Cubic { k } => k * x * x * x,
            ScalarFn::TanhScaled { a, b, k } => a * x + (b - a) * (k * x).tanh() / k,
            ScalarFn::SectorModulated { a, b, freq, phase } => {
                x * (a + (b - a) * 0.5 * (1.0 + (freq * x + phase).sin()))
            }
        }
    }

    /// Sector implied by the parameters, when they describe one with `b > a > 0`.
    pub fn natural_sector(&self) -> Option<SectorBound> {
        match *self {
            ScalarFn::Saturation { a, b, .. }
            | ScalarFn::DeadzoneGain { a, b, .. }
            | ScalarFn::TanhScaled { a, b, .. }
            | ScalarFn::SectorModulated { a, b, .. } => SectorBound::new(a.min(b), a.max(b)).ok(),
            ScalarFn::Gain { .. } | ScalarFn::Cubic { .. } => None,
        }
    }

    /// `true` if `f` is odd-symmetric about zero for this parameter set;
    /// used to halve the sector scan.
    fn is_odd(&self) -> bool {
        !matches!(self, ScalarFn::SectorModulated { phase, .. } if *phase != 0.0)
    }

    /// Scans `x` over a symmetric logarithmic range and reports the first
    /// point where `f` leaves `sector`.
    pub fn check_sector(&self, sector: SectorBound) -> Result<()> {
        let mut xs = Vec::with_capacity(2 * 1201);
        for i in 0..=1200 {
            let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 1200.0);
            xs.push(x);
            if !self.is_odd() {
                xs.push(-x);
            }
        }
        for x in xs {
            if !sector.contains(x, self.eval(x)) {
                return Err(AngleError::InvalidArgument(format!(
                    "f({x:e}) = {:e} lies outside the sector [{}, {}]",
                    self.eval(x),
                    sector.a(),
                    sector.b()
                )));
            }
        }
        Ok(())
    }
}
