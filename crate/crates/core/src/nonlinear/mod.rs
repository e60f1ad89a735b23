//! Nonlinear operators on sampled signals, probe-based angle estimates and
//! closed-form angle bounds from passivity indices and sectors.

mod estimate;
mod operator;
mod probes;
mod scalar;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use estimate::{
    estimate_generalized_angle, estimate_incremental_angle, estimate_l2_gain, estimate_l2e_angle,
    estimate_secant_gain, estimate_singular_angle, ifofp_check, passivity_angle_check,
    secant_bound, secant_condition_check, AngleEstimate, EstimatorOptions, IfofpVerdict,
    IFOFP_SWEEP,
};
pub use operator::{evaluate, FeedbackOptions, SystemOperator};
pub use probes::{probe_library, ProbeConfig, ProbeSet};
pub use scalar::ScalarFn;

use crate::angle::AngleRadians;
use crate::certificate::{cascade_angle_bound, feedback_angle_closure, BoundedAngle};
use crate::error::{AngleError, Result};
use crate::lti::{self, FrequencyGrid, LtiOptions, SectorBound};

/// Input (`nu`) and output (`rho`) passivity indices:
/// `<u, Pu> >= nu ||u||^2 + rho ||Pu||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassivityIndices {
    pub nu: f64,
    pub rho: f64,
}

impl PassivityIndices {
    pub fn new(nu: f64, rho: f64) -> Self {
        PassivityIndices { nu, rho }
    }

    /// Indices of any static map in the sector `[a, b]`.
    pub fn from_sector(s: SectorBound) -> Self {
        let (a, b) = (s.a(), s.b());
        PassivityIndices {
            nu: a * b / (a + b),
            rho: 1.0 / (a + b),
        }
    }

    fn check_vsp(&self) -> Result<f64> {
        let p = self.nu * self.rho;
        if !(self.nu > 0.0 && self.rho > 0.0) {
            return Err(AngleError::InvalidArgument(format!(
                "very strict passivity needs nu, rho > 0 (got {}, {})",
                self.nu, self.rho
            )));
        }
        if p > 0.25 {
            return Err(AngleError::InvalidArgument(format!(
                "nu * rho = {p} exceeds 1/4"
            )));
        }
        Ok(p)
    }
}

/// `theta(P) <= arccos(2 sqrt(nu rho))` for a very strictly passive `P`.
pub fn vsp_angle_bound(idx: PassivityIndices) -> Result<AngleRadians> {
    let p = idx.check_vsp()?;
    Ok(AngleRadians::from_cos(2.0 * p.sqrt()))
}

/// Bound from several valid index pairs: the largest product wins.
pub fn convex_vsp_angle_bound(indices: &[PassivityIndices]) -> Result<AngleRadians> {
    if indices.is_empty() {
        return Err(AngleError::Empty("passivity index list"));
    }
    let mut best = 0.0f64;
    for idx in indices {
        best = best.max(idx.check_vsp()?);
    }
    Ok(AngleRadians::from_cos(2.0 * best.sqrt()))
}

/// `theta(N) <= arccos(2 sqrt(ab) / (a + b)) = arcsin((b - a) / (a + b))`
/// for a static map in the sector `[a, b]`. Evaluated in the arcsine form,
/// which stays accurate for thin sectors.
pub fn sector_angle_bound(s: SectorBound) -> AngleRadians {
    AngleRadians::saturating(((s.b() - s.a()) / (s.a() + s.b())).asin())
}

/// Upper bound on `theta(op)` from its structure alone: sectors and gains
/// for static maps, the frequency response for LTI blocks, and the
/// cascade and feedback rules for composites. Falls back to `pi`.
pub fn analytic_angle_bound(
    op: &SystemOperator,
    grid: &FrequencyGrid,
    lti_opts: &LtiOptions,
) -> Result<BoundedAngle> {
    let trivial = BoundedAngle::analytic(AngleRadians::PI);
    Ok(match op {
        SystemOperator::Static { f, sector, .. } => {
            match (f, sector.or_else(|| f.natural_sector())) {
                (ScalarFn::Gain { k }, _) => {
                    let a = if *k >= 0.0 {
                        AngleRadians::ZERO
                    } else {
                        AngleRadians::PI
                    };
                    BoundedAngle::analytic(a).linear(true)
                }
                (_, Some(s)) => BoundedAngle::analytic(sector_angle_bound(s)),
                (ScalarFn::Cubic { k }, None) if *k >= 0.0 => {
                    BoundedAngle::analytic(AngleRadians::RIGHT)
                }
                _ => trivial,
            }
        }
        SystemOperator::Lti { system, .. } => lti::system_angle_upper(system, grid, lti_opts)?,
        SystemOperator::Delay { .. } => trivial.linear(true),
        SystemOperator::Scaled { base, .. } => analytic_angle_bound(base, grid, lti_opts)?,
        SystemOperator::Cascade(stages) => {
            let mut acc = BoundedAngle::analytic(AngleRadians::ZERO).linear(true);
            for s in stages {
                acc = cascade_angle_bound(acc, analytic_angle_bound(s, grid, lti_opts)?)?;
            }
            acc
        }
        SystemOperator::Feedback {
            plant, controller, ..
        } => {
            let p = analytic_angle_bound(plant, grid, lti_opts)?;
            let c = analytic_angle_bound(controller, grid, lti_opts)?;
            feedback_angle_closure(p, c)?.unwrap_or(trivial)
        }
    })
}

/// Secant gain from structure: `k` for a positive gain, `b` for a sector
/// `[a, b]` map (`y^2 = k x y <= b x y` pointwise), the frequency-domain
/// value for LTI blocks. `None` when no closed form applies.
pub fn analytic_secant_gain(
    op: &SystemOperator,
    grid: &FrequencyGrid,
    lti_opts: &LtiOptions,
) -> Result<Option<f64>> {
    Ok(match op {
        SystemOperator::Static { f, sector, .. } => {
            match (f, sector.or_else(|| f.natural_sector())) {
                (ScalarFn::Gain { k }, _) if *k > 0.0 => Some(*k),
                (_, Some(s)) => Some(s.b()),
                _ => None,
            }
        }
        SystemOperator::Lti { system, .. } => {
            let g = lti::secant_gain(system, grid, lti_opts)?;
            g.is_finite().then_some(g)
        }
        SystemOperator::Scaled { base, k } => {
            analytic_secant_gain(base, grid, lti_opts)?.map(|g| g * k)
        }
        _ => None,
    })
}

/// `true` if the angle bound leaves the passive range.
pub fn exceeds_passive_range(angle: AngleRadians) -> bool {
    angle.value() > PI / 2.0
}
