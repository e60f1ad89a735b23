//! Probe-based estimators. Every angle here is the worst case seen on a
//! finite probe set, hence a lower bound on the operator's angle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operator::{evaluate, SystemOperator};
use super::probes::ProbeSet;
use crate::angle::AngleRadians;
use crate::certificate::{AngleFlavor, BoundedAngle, InputsDigest, Method, StabilityCertificate};
use crate::error::{AngleError, Result};
use crate::signal::{
    cos_from_energies, energy, inner_product, l2_norm, truncate, DiscreteSignal, MultiplierOperator,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// Outputs with `||Pu|| <= kernel_tol * ||u||` are skipped.
    pub kernel_tol: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions { kernel_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub angle: AngleRadians,
    /// The smallest cosine observed; `angle = arccos(cos_value)`.
    pub cos_value: f64,
    pub flavor: AngleFlavor,
    pub witness_probe: String,
    pub witness_index: usize,
    /// Truncation time of the witness, for the L2e flavor.
    pub witness_time: Option<f64>,
    /// Probes (or pairs, or probe/time combinations) that entered the minimum.
    pub probe_count: usize,
    pub skipped: usize,
    pub seed: Option<u64>,
}

impl AngleEstimate {
    /// The estimate as a sampled lower bound; certificate rules refuse it.
    pub fn bounded(&self) -> BoundedAngle {
        BoundedAngle::sampled(self.angle).flavor(self.flavor)
    }
}

/// `<u, y> / (||u|| ||y||)` clamped to `[-1, 1]`, or `None` when degenerate.
fn cos_ratio(
    u: &DiscreteSignal,
    y: &DiscreteSignal,
    opts: &EstimatorOptions,
) -> Result<Option<f64>> {
    let uu = energy(u);
    let yy = energy(y);
    if uu == 0.0 || yy.sqrt() <= opts.kernel_tol * uu.sqrt() {
        return Ok(None);
    }
    Ok(Some(cos_from_energies(inner_product(u, y)?, uu, yy)))
}

struct Candidate {
    index: usize,
    time: Option<f64>,
    cos: Option<f64>,
}

fn reduce(
    cands: Vec<Candidate>,
    flavor: AngleFlavor,
    label: impl Fn(usize) -> String,
    seed: Option<u64>,
) -> Result<AngleEstimate> {
    let total = cands.len();
    let mut best: Option<(f64, usize, Option<f64>)> = None;
    let mut used = 0;
    for c in &cands {
        if let Some(cos) = c.cos {
            used += 1;
            if best.map_or(true, |(b, _, _)| cos < b) {
                best = Some((cos, c.index, c.time));
            }
        }
    }
    let (cos, index, time) = best.ok_or_else(|| {
        AngleError::DegenerateProbes(format!(
            "all {total} probes have zero input or zero response"
        ))
    })?;
    Ok(AngleEstimate {
        angle: AngleRadians::from_cos(cos),
        cos_value: cos,
        flavor,
        witness_probe: label(index),
        witness_index: index,
        witness_time: time,
        probe_count: used,
        skipped: total - used,
        seed,
    })
}

fn check_dims(op: &SystemOperator, probes: &ProbeSet) -> Result<()> {
    if probes.is_empty() {
        return Err(AngleError::Empty("probe set"));
    }
    if let Some(bad) = probes.signals.iter().find(|u| u.dim() != op.dim()) {
        return Err(AngleError::DimensionMismatch {
            expected: op.dim(),
            got: bad.dim(),
        });
    }
    Ok(())
}

fn outputs(op: &SystemOperator, probes: &ProbeSet) -> Result<Vec<DiscreteSignal>> {
    probes.signals.par_iter().map(|u| evaluate(op, u)).collect()
}

/// `min_u <u, Pu> / (||u|| ||Pu||)` over the probes.
pub fn estimate_singular_angle(
    op: &SystemOperator,
    probes: &ProbeSet,
    opts: &EstimatorOptions,
) -> Result<AngleEstimate> {
    check_dims(op, probes)?;
    let core = op.angle_core();
    let ys = outputs(core, probes)?;
    let cands = probes
        .signals
        .iter()
        .zip(&ys)
        .enumerate()
        .map(|(index, (u, y))| {
            Ok(Candidate {
                index,
                time: None,
                cos: cos_ratio(u, y, opts)?,
            })
        })
        .collect::<Result<_>>()?;
    reduce(
        cands,
        AngleFlavor::Standard,
        |i| probes.labels[i].clone(),
        probes.seed,
    )
}

/// `max_u ||Pu|| / ||u||` over the nonzero probes.
pub fn estimate_l2_gain(op: &SystemOperator, probes: &ProbeSet) -> Result<f64> {
    check_dims(op, probes)?;
    let ys = outputs(op, probes)?;
    let mut gain: Option<f64> = None;
    for (u, y) in probes.signals.iter().zip(&ys) {
        let nu = l2_norm(u);
        if nu > 0.0 {
            gain = Some(gain.unwrap_or(0.0).max(l2_norm(y) / nu));
        }
    }
    gain.ok_or_else(|| AngleError::DegenerateProbes("every probe is zero".into()))
}

/// Minimum over probes `u` and times `T` of the angle between `u_T` and `(Pu)_T`.
pub fn estimate_l2e_angle(
    op: &SystemOperator,
    probes: &ProbeSet,
    times: &[f64],
    opts: &EstimatorOptions,
) -> Result<AngleEstimate> {
    check_dims(op, probes)?;
    if times.is_empty() {
        return Err(AngleError::Empty("truncation times"));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
        return Err(AngleError::InvalidArgument(format!(
            "truncation times must be > 0, got {t}"
        )));
    }
    let core = op.angle_core();
    let ys = outputs(core, probes)?;
    let mut cands = Vec::with_capacity(probes.len() * times.len());
    for (index, (u, y)) in probes.signals.iter().zip(&ys).enumerate() {
        for &t in times {
            let cos = cos_ratio(&truncate(u, t)?, &truncate(y, t)?, opts)?;
            cands.push(Candidate {
                index,
                time: Some(t),
                cos,
            });
        }
    }
    reduce(
        cands,
        AngleFlavor::L2e,
        |i| probes.labels[i].clone(),
        probes.seed,
    )
}

/// Minimum over pairs of the angle between `u - v` and `Pu - Pv`.
pub fn estimate_incremental_angle(
    op: &SystemOperator,
    pairs: &[(DiscreteSignal, DiscreteSignal)],
    seed: Option<u64>,
    opts: &EstimatorOptions,
) -> Result<AngleEstimate> {
    if pairs.is_empty() {
        return Err(AngleError::Empty("probe pairs"));
    }
    let core = op.angle_core();
    let cands = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (u, v))| {
            let du = u.add_scaled(-1.0, v)?;
            if du.is_zero() {
                return Ok(Candidate {
                    index,
                    time: None,
                    cos: None,
                });
            }
            let dy = evaluate(core, u)?.add_scaled(-1.0, &evaluate(core, v)?)?;
            Ok(Candidate {
                index,
                time: None,
                cos: cos_ratio(&du, &dy, opts)?,
            })
        })
        .collect::<Result<_>>()?;
    reduce(
        cands,
        AngleFlavor::Incremental,
        |i| format!("pair-{i}"),
        seed,
    )
}

/// Minimum over probes of the angle between `M1 u` and `M2 P u`.
pub fn estimate_generalized_angle(
    op: &SystemOperator,
    m1: &MultiplierOperator,
    m2: &MultiplierOperator,
    probes: &ProbeSet,
    opts: &EstimatorOptions,
) -> Result<AngleEstimate> {
    check_dims(op, probes)?;
    for m in [m1, m2] {
        if m.dim() != op.dim() {
            return Err(AngleError::DimensionMismatch {
                expected: op.dim(),
                got: m.dim(),
            });
        }
    }
    let core = op.angle_core();
    let cands = probes
        .signals
        .par_iter()
        .enumerate()
        .map(|(index, u)| {
            let y = evaluate(core, u)?;
            let cos = cos_ratio(&m1.apply(u)?, &m2.apply(&y)?, opts)?;
            Ok(Candidate {
                index,
                time: None,
                cos,
            })
        })
        .collect::<Result<_>>()?;
    reduce(
        cands,
        AngleFlavor::Generalized,
        |i| probes.labels[i].clone(),
        probes.seed,
    )
}

/// Outcome of the sampled IFOFP test. A finite sweep can only refute the
/// characterization, never prove it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum IfofpVerdict {
    Consistent {
        checks: usize,
    },
    Refuted {
        probe: String,
        nu: f64,
        rho: f64,
        slack: f64,
    },
}

impl IfofpVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, IfofpVerdict::Consistent { .. })
    }
}

/// Number of `c` values on the hyperbola sweep.
pub const IFOFP_SWEEP: usize = 64;

/// Checks `<u, Pu> >= nu ||u||^2 + rho ||Pu||^2` on every probe for
/// `nu = c cos(alpha) / 2`, `rho = cos(alpha) / (2 c)`, with `c` on a
/// logarithmic grid over `[1e-3, 1e3]`.
pub fn ifofp_check(
    op: &SystemOperator,
    alpha: AngleRadians,
    probes: &ProbeSet,
) -> Result<IfofpVerdict> {
    if alpha.value() <= PI / 2.0 {
        return Err(AngleError::InvalidArgument(format!(
            "alpha must exceed pi/2, got {}",
            alpha.value()
        )));
    }
    check_dims(op, probes)?;
    let ys = outputs(op, probes)?;
    let ca = alpha.cos();
    let mut checks = 0;
    for (i, (u, y)) in probes.signals.iter().zip(&ys).enumerate() {
        let ip = inner_product(u, y)?;
        let (uu, yy) = (l2_norm(u).powi(2), l2_norm(y).powi(2));
        for j in 0..IFOFP_SWEEP {
            let c = 10f64.powf(-3.0 + 6.0 * j as f64 / (IFOFP_SWEEP - 1) as f64);
            let (nu, rho) = (c * ca / 2.0, ca / (2.0 * c));
            let rhs = nu * uu + rho * yy;
            let slack = ip - rhs;
            checks += 1;
            if slack < -1e-12 * (ip.abs() + rhs.abs()) {
                return Ok(IfofpVerdict::Refuted {
                    probe: probes.labels[i].clone(),
                    nu,
                    rho,
                    slack,
                });
            }
        }
    }
    Ok(IfofpVerdict::Consistent { checks })
}

/// `max_u ||Pu||^2 / <u, Pu>`, a lower bound on the secant gain.
pub fn estimate_secant_gain(
    op: &SystemOperator,
    probes: &ProbeSet,
    opts: &EstimatorOptions,
) -> Result<f64> {
    check_dims(op, probes)?;
    let ys = outputs(op, probes)?;
    let mut gain = None;
    for (i, (u, y)) in probes.signals.iter().zip(&ys).enumerate() {
        let ny = l2_norm(y);
        if ny <= opts.kernel_tol * l2_norm(u) {
            continue;
        }
        let ip = inner_product(u, y)?;
        if ip <= 0.0 {
            return Err(AngleError::NotOutputStrictlyPassive {
                probe: probes.labels[i].clone(),
                inner: ip,
            });
        }
        gain = Some(f64::max(gain.unwrap_or(0.0), ny * ny / ip));
    }
    gain.ok_or_else(|| AngleError::DegenerateProbes("every probe has zero response".into()))
}

/// `(sec(pi / N))^N`, the secant-condition bound for `N` blocks.
pub fn secant_bound(n: usize) -> f64 {
    (PI / n as f64).cos().powi(n as i32).recip()
}

/// Secant condition for a cyclic loop of `N >= 3` output strictly passive
/// blocks: `prod gamma_i < sec(pi/N)^N`. Margin is `bound - product`.
pub fn secant_condition_check(gains: &[f64], margin: f64) -> Result<StabilityCertificate> {
    if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(AngleError::InvalidArgument(format!(
            "secant gains must be > 0, got {g}"
        )));
    }
    let n = gains.len();
    if n < 3 {
        return Ok(StabilityCertificate::not_applicable(
            Method::Secant,
            "secant condition needs at least three blocks",
        ));
    }
    let product: f64 = gains.iter().product();
    let bound = secant_bound(n);
    let digest = InputsDigest::new("secant").f64s(gains).f64(margin);
    Ok(
        StabilityCertificate::decide(Method::Secant, bound - product, margin)
            .with_witness("gain_product", product)
            .with_witness("secant_bound", bound)
            .with_digest(digest),
    )
}

/// Necessary condition for passivity: the estimate must not exceed `pi/2`.
pub fn passivity_angle_check(est: &AngleEstimate) -> bool {
    est.angle.value() <= PI / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{LtiSystem, SectorBound};
    use crate::nonlinear::probes::{probe_library, ProbeConfig};
    use crate::nonlinear::scalar::ScalarFn;
    use crate::nonlinear::sector_angle_bound;

    fn small_probes(dim: usize) -> ProbeSet {
        probe_library(
            dim,
            &ProbeConfig {
                count: 24,
                support_steps: 200,
                tail_steps: 200,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn stat(f: ScalarFn) -> SystemOperator {
        SystemOperator::static_map(f, None, 1).unwrap()
    }

    fn sat13() -> SystemOperator {
        SystemOperator::static_map(
            ScalarFn::Saturation {
                a: 1.0,
                b: 3.0,
                level: 0.5,
            },
            Some(SectorBound::new(1.0, 3.0).unwrap()),
            1,
        )
        .unwrap()
    }

    fn lag(num: &[f64], den: &[f64]) -> SystemOperator {
        SystemOperator::lti(LtiSystem::from_transfer_function(num, den).unwrap()).unwrap()
    }

    fn o() -> EstimatorOptions {
        EstimatorOptions::default()
    }

    #[test]
    fn singular_angle_examples() {
        let p = small_probes(1);
        let id = estimate_singular_angle(&SystemOperator::identity(1), &p, &o()).unwrap();
        assert_eq!(id.angle.value(), 0.0);
        let neg = estimate_singular_angle(&stat(ScalarFn::Gain { k: -1.0 }), &p, &o()).unwrap();
        assert_eq!(neg.angle.value(), PI);
        let sat = estimate_singular_angle(&sat13(), &p, &o()).unwrap();
        assert!(sat.angle.value() <= PI / 6.0 + 1e-6);
        assert_eq!(sat.seed, Some(42));
        assert_eq!(sat.cos_value.acos(), sat.angle.value());
    }

    #[test]
    fn degenerate_probes_error() {
        let z = ProbeSet::from_signals(vec![DiscreteSignal::zeros(5, 1, 0.1).unwrap()]).unwrap();
        assert!(matches!(
            estimate_singular_angle(&SystemOperator::identity(1), &z, &o()),
            Err(AngleError::DegenerateProbes(_))
        ));
        let p = small_probes(1);
        assert!(estimate_singular_angle(&stat(ScalarFn::Gain { k: 0.0 }), &p, &o()).is_err());
    }

    #[test]
    fn l2_gain_examples() {
        let p = small_probes(1);
        assert_eq!(
            estimate_l2_gain(&stat(ScalarFn::Gain { k: 2.0 }), &p).unwrap(),
            2.0
        );
        assert_eq!(
            estimate_l2_gain(&SystemOperator::identity(1), &p).unwrap(),
            1.0
        );
        let h = 0.01;
        let tones = ProbeSet::from_signals(
            [0.01, 0.02, 0.05]
                .iter()
                .map(|w| DiscreteSignal::from_fn(40_000, 1, h, |t| vec![(w * t).sin()]).unwrap())
                .collect(),
        )
        .unwrap();
        let g = estimate_l2_gain(&lag(&[1.0], &[1.0, 1.0]), &tones).unwrap();
        assert!((g - 1.0).abs() < 1e-2, "{g}");
    }

    #[test]
    fn l2e_examples() {
        let p = small_probes(1);
        let id = estimate_l2e_angle(&SystemOperator::identity(1), &p, &[0.5, 1.0], &o()).unwrap();
        assert_eq!(id.angle.value(), 0.0);
        let op = lag(&[1.0], &[1.0, 1.0]);
        let std = estimate_singular_angle(&op, &p, &o()).unwrap();
        let e = estimate_l2e_angle(&op, &p, &[0.3, 1.0, 2.0, 1e6], &o()).unwrap();
        assert!(e.cos_value <= std.cos_value);
        assert!(estimate_l2e_angle(&op, &p, &[], &o()).is_err());
        assert!(estimate_l2e_angle(&op, &p, &[0.0], &o()).is_err());
    }

    #[test]
    fn l2e_sees_more_of_a_delay() {
        let h = 0.01;
        let tone = DiscreteSignal::from_fn(2000, 1, h, |t| vec![(2.0 * t).sin()]).unwrap();
        let set = ProbeSet::from_signals(vec![tone]).unwrap();
        let d = SystemOperator::delay(60, 1).unwrap();
        let full = estimate_singular_angle(&d, &set, &o()).unwrap();
        let small: Vec<f64> = (1..=100).map(|k| 0.05 * k as f64).chain([1e6]).collect();
        let e = estimate_l2e_angle(&d, &set, &small, &o()).unwrap();
        assert!(
            e.angle.value() > full.angle.value() + 0.05,
            "{} vs {}",
            e.angle,
            full.angle
        );
    }

    #[test]
    fn incremental_examples() {
        let p = small_probes(1);
        let lin = lag(&[1.0], &[1.0, 2.0]);
        let pairs = p.incremental_pairs();
        let inc = estimate_incremental_angle(&lin, &pairs, p.seed, &o()).unwrap();
        let diffs = ProbeSet::from_signals(
            pairs
                .iter()
                .map(|(u, v)| u.add_scaled(-1.0, v).unwrap())
                .collect(),
        )
        .unwrap();
        let std = estimate_singular_angle(&lin, &diffs, &o()).unwrap();
        assert!((inc.angle.value() - std.angle.value()).abs() < 1e-12);

        // the second components straddle zero, where the slope of x^3 vanishes
        let base = ProbeSet::from_signals(vec![
            DiscreteSignal::scalar(vec![10.0, 0.1], 1.0).unwrap(),
            DiscreteSignal::scalar(vec![9.0, -0.1], 1.0).unwrap(),
        ])
        .unwrap();
        let cubic = stat(ScalarFn::Cubic { k: 1.0 });
        let s = estimate_singular_angle(&cubic, &base, &o()).unwrap();
        let i = estimate_incremental_angle(&cubic, &base.incremental_pairs(), None, &o()).unwrap();
        assert!(i.angle.value() > s.angle.value());

        let u = DiscreteSignal::scalar(vec![1.0, 2.0], 1.0).unwrap();
        let same = estimate_incremental_angle(&cubic, &[(u.clone(), u.clone())], None, &o());
        assert!(matches!(same, Err(AngleError::DegenerateProbes(_))));
    }

    #[test]
    fn incremental_dominates_standard_exactly() {
        let p = small_probes(1);
        for op in [
            sat13(),
            stat(ScalarFn::Cubic { k: 0.3 }),
            lag(&[1.0, -2.0], &[1.0, 3.0, 2.0]),
        ] {
            let s = estimate_singular_angle(&op, &p, &o()).unwrap();
            let i = estimate_incremental_angle(&op, &p.incremental_pairs(), p.seed, &o()).unwrap();
            assert!(i.cos_value <= s.cos_value);
        }
    }

    #[test]
    fn generalized_examples() {
        let p = small_probes(1);
        let op = lag(&[1.0], &[1.0, 1.0]);
        let id = MultiplierOperator::identity(1);
        let g = estimate_generalized_angle(&op, &id, &id, &p, &o()).unwrap();
        let s = estimate_singular_angle(&op, &p, &o()).unwrap();
        assert_eq!(g.cos_value, s.cos_value);
        let c = MultiplierOperator::new(LtiSystem::siso_gain(2.0), false).unwrap();
        let gc = estimate_generalized_angle(&op, &c, &c, &p, &o()).unwrap();
        assert!((gc.cos_value - s.cos_value).abs() < 1e-12);
    }

    #[test]
    fn multiplier_cancels_pole() {
        let cfg = ProbeConfig {
            count: 16,
            sample_period: 1e-3,
            support_steps: 4000,
            tail_steps: 4000,
            ..Default::default()
        };
        let p = probe_library(1, &cfg).unwrap();
        let op = lag(&[1.0], &[1.0, 1.0]);
        let m2 = MultiplierOperator::new(
            LtiSystem::from_transfer_function(&[1.0, 1.0], &[1.0, 10.0]).unwrap(),
            false,
        )
        .unwrap();
        let g = estimate_generalized_angle(&op, &MultiplierOperator::identity(1), &m2, &p, &o())
            .unwrap();
        let target = estimate_singular_angle(&lag(&[1.0], &[1.0, 10.0]), &p, &o()).unwrap();
        assert!(
            (g.angle.value() - target.angle.value()).abs() < 1e-2,
            "{} vs {}",
            g.angle,
            target.angle
        );
    }

    #[test]
    fn scale_invariance_is_exact() {
        let p = small_probes(1);
        for op in [sat13(), lag(&[1.0], &[1.0, 1.0])] {
            let s = estimate_singular_angle(&op, &p, &o()).unwrap();
            let k = estimate_singular_angle(&SystemOperator::scaled(op, 3.7).unwrap(), &p, &o())
                .unwrap();
            assert_eq!(s, k);
        }
    }

    #[test]
    fn ifofp_examples() {
        let p = small_probes(1);
        let half_neg = stat(ScalarFn::Gain { k: -0.5 });
        assert!(ifofp_check(&half_neg, AngleRadians::PI, &p)
            .unwrap()
            .is_consistent());
        let id = SystemOperator::identity(1);
        assert!(ifofp_check(&id, AngleRadians::new(2.0).unwrap(), &p)
            .unwrap()
            .is_consistent());
        let neg = stat(ScalarFn::Gain { k: -1.0 });
        let v = ifofp_check(&neg, AngleRadians::new(PI / 2.0 + 0.01).unwrap(), &p).unwrap();
        assert!(matches!(v, IfofpVerdict::Refuted { .. }));
        assert!(ifofp_check(&id, AngleRadians::new(1.0).unwrap(), &p).is_err());
    }

    #[test]
    fn secant_gain_examples() {
        let p = small_probes(1);
        let k = estimate_secant_gain(&stat(ScalarFn::Gain { k: 2.5 }), &p, &o()).unwrap();
        assert!((k - 2.5).abs() < 1e-12);
        let s = estimate_secant_gain(&sat13(), &p, &o()).unwrap();
        assert!(s <= 4.0);
        assert!(matches!(
            estimate_secant_gain(&stat(ScalarFn::Gain { k: -1.0 }), &p, &o()),
            Err(AngleError::NotOutputStrictlyPassive { .. })
        ));
    }

    #[test]
    fn secant_condition_examples() {
        assert!(secant_condition_check(&[1.0, 1.0, 1.0], 0.0)
            .unwrap()
            .is_certified());
        let edge = secant_condition_check(&[2.0, 2.0, 2.0], 0.0).unwrap();
        assert!(!edge.is_certified());
        assert!((secant_bound(3) - 8.0).abs() < 1e-12);
        assert!(secant_bound(100) < 1.051);
        for n in 3..100 {
            assert!(secant_bound(n + 1) < secant_bound(n));
        }
        use crate::certificate::Verdict;
        assert_eq!(
            secant_condition_check(&[1.0, 1.0], 0.0).unwrap().verdict,
            Verdict::NotApplicable
        );
        assert!(secant_condition_check(&[1.0, 0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn passivity_check_examples() {
        let p = small_probes(1);
        let est = |op: &SystemOperator| estimate_singular_angle(op, &p, &o()).unwrap();
        assert!(passivity_angle_check(&est(&SystemOperator::identity(1))));
        assert!(!passivity_angle_check(&est(&stat(ScalarFn::Gain {
            k: -1.0
        }))));
        let sat = est(&sat13());
        assert!(passivity_angle_check(&sat));
        assert!(
            sat.angle.value()
                <= sector_angle_bound(SectorBound::new(1.0, 3.0).unwrap()).value() + 1e-9
        );
    }
}
