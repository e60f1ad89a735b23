//! Small-angle theorems as certificate rules over angle values.
//!
//! Every rule consumes [`BoundedAngle`]s, which carry the provenance of the
//! number. Only upper bounds on the true angle can discharge a `sum < pi`
//! hypothesis, so sampled estimates (lower bounds on the angle) are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angle::AngleRadians;
use crate::error::{AngleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Inconclusive,
    NotApplicable,
}

/// Which theorem a certificate discharges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Thm1,
    Cor1,
    Thm2,
    Thm3,
    Cor2,
    Cor3,
    Thm4,
    Cor4,
    Cor5,
    L2e,
    Secant,
}

/// How exhaustive the evidence behind a verdict is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Pure arithmetic on the supplied bounds.
    Exact,
    /// A frequency-domain condition checked on a finite grid only.
    Grid,
}

/// Which single-loop reading of the feedback system the verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopReading {
    /// Exogenous input enters before the plant; `e2 = 0`.
    #[default]
    E2Zero,
    /// Exogenous input enters before the controller; `e1 = 0`.
    E1Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WitnessValue {
    Number(f64),
    Numbers(Vec<f64>),
    Text(String),
}

impl From<f64> for WitnessValue {
    /// Non-finite values become text, since JSON has no spelling for them.
    fn from(v: f64) -> Self {
        if v.is_finite() {
            WitnessValue::Number(v)
        } else if v.is_nan() {
            WitnessValue::Text("nan".into())
        } else if v > 0.0 {
            WitnessValue::Text("inf".into())
        } else {
            WitnessValue::Text("-inf".into())
        }
    }
}

impl From<Vec<f64>> for WitnessValue {
    fn from(v: Vec<f64>) -> Self {
        WitnessValue::Numbers(v)
    }
}

impl From<&str> for WitnessValue {
    fn from(v: &str) -> Self {
        WitnessValue::Text(v.to_string())
    }
}

impl From<String> for WitnessValue {
    fn from(v: String) -> Self {
        WitnessValue::Text(v)
    }
}

/// The reified conclusion of a small-angle (or secant) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub verdict: Verdict,
    pub method: Method,
    /// Distance to the theorem's boundary: radians for angle rules,
    /// dimensionless for the secant rule.
    #[serde(rename = "margin_rad")]
    pub margin: f64,
    #[serde(with = "omega_serde")]
    pub critical_omega: Option<f64>,
    pub seed: Option<u64>,
    pub tier: Tier,
    #[serde(default)]
    pub loop_reading: LoopReading,
    pub witnesses: BTreeMap<String, WitnessValue>,
    pub inputs_digest: String,
}

impl StabilityCertificate {
    /// Certified iff `margin > threshold` (and `margin > 0`).
    pub fn decide(method: Method, margin: f64, threshold: f64) -> Self {
        let verdict = if margin.is_finite() && margin > threshold.max(0.0) {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        };
        StabilityCertificate {
            verdict,
            method,
            margin,
            critical_omega: None,
            seed: None,
            tier: Tier::Exact,
            loop_reading: LoopReading::default(),
            witnesses: BTreeMap::new(),
            inputs_digest: String::new(),
        }
    }

    pub fn not_applicable(method: Method, reason: &str) -> Self {
        let mut cert = Self::decide(method, f64::NAN, 0.0);
        cert.verdict = Verdict::NotApplicable;
        cert.margin = 0.0;
        cert.witnesses.insert("reason".into(), reason.into());
        cert
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn with_witness(mut self, name: &str, value: impl Into<WitnessValue>) -> Self {
        self.witnesses.insert(name.to_string(), value.into());
        self
    }

    pub fn with_critical_omega(mut self, omega: f64) -> Self {
        self.critical_omega = Some(omega);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_tier(mut self, tier: Tier) -> Self {
        self.tier = tier;
        self
    }

    pub fn with_loop_reading(mut self, reading: LoopReading) -> Self {
        self.loop_reading = reading;
        self
    }

    pub fn with_digest(mut self, digest: InputsDigest) -> Self {
        self.inputs_digest = digest.finish();
        self
    }
}

/// Serializes `Some(f64::INFINITY)` as the string `"inf"`.
mod omega_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(w) if w.is_infinite() => s.serialize_some("inf"),
            Some(w) => s.serialize_some(w),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Finite(w)) => Ok(Some(w)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("bad omega {t}"))),
        }
    }
}

/// SHA-256 over the bit patterns of a certificate's operands.
#[derive(Default, Clone)]
pub struct InputsDigest(Sha256);

impl InputsDigest {
    pub fn new(tag: &str) -> Self {
        let mut d = InputsDigest(Sha256::new());
        d.0.update(tag.as_bytes());
        d
    }

    pub fn f64(mut self, v: f64) -> Self {
        self.0.update(v.to_bits().to_le_bytes());
        self
    }

    pub fn f64s<'a>(mut self, vs: impl IntoIterator<Item = &'a f64>) -> Self {
        for v in vs {
            self.0.update(v.to_bits().to_le_bytes());
        }
        self
    }

    pub fn text(mut self, t: &str) -> Self {
        self.0.update((t.len() as u64).to_le_bytes());
        self.0.update(t.as_bytes());
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// Where an angle value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed-form bound from passivity indices, sectors or exact formulas.
    AnalyticUpperBound,
    /// Numerically certified over-approximation (e.g. matrix LMI bound).
    CertifiedOverApprox,
    /// Best value found by sampling; a lower bound on the true angle.
    SampledLowerBound,
}

/// Which singular-angle definition the value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleFlavor {
    Standard,
    L2e,
    Incremental,
    Generalized,
}

/// An angle together with what it is known to bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedAngle {
    pub angle: AngleRadians,
    pub provenance: Provenance,
    pub flavor: AngleFlavor,
    /// The operand is a linear operator.
    #[serde(default)]
    pub linear: bool,
}

impl BoundedAngle {
    pub fn analytic(angle: AngleRadians) -> Self {
        BoundedAngle {
            angle,
            provenance: Provenance::AnalyticUpperBound,
            flavor: AngleFlavor::Standard,
            linear: false,
        }
    }

    pub fn certified(angle: AngleRadians) -> Self {
        BoundedAngle {
            provenance: Provenance::CertifiedOverApprox,
            ..Self::analytic(angle)
        }
    }

    pub fn sampled(angle: AngleRadians) -> Self {
        BoundedAngle {
            provenance: Provenance::SampledLowerBound,
            ..Self::analytic(angle)
        }
    }

    pub fn flavor(mut self, flavor: AngleFlavor) -> Self {
        self.flavor = flavor;
        self
    }

    pub fn linear(mut self, linear: bool) -> Self {
        self.linear = linear;
        self
    }

    pub fn value(&self) -> f64 {
        self.angle.value()
    }

    fn require_upper(&self) -> Result<()> {
        match self.provenance {
            Provenance::SampledLowerBound => Err(AngleError::LowerBoundProvenance),
            _ => Ok(()),
        }
    }
}

/// Options shared by the angle-sum rules.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleOptions {
    /// Required clearance below `pi`; zero gives the strict inequality.
    pub margin: f64,
    pub loop_reading: LoopReading,
}

fn sum_rule(method: Method, angles: &[BoundedAngle], opts: RuleOptions) -> StabilityCertificate {
    let sum: f64 = angles.iter().map(BoundedAngle::value).sum();
    let mut digest = InputsDigest::new(&format!("{method:?}"));
    for a in angles {
        digest = digest.f64(a.value());
    }
    StabilityCertificate::decide(method, PI - sum, opts.margin)
        .with_witness("angle_sum", sum)
        .with_witness(
            "angles",
            angles.iter().map(BoundedAngle::value).collect::<Vec<_>>(),
        )
        .with_loop_reading(opts.loop_reading)
        .with_digest(digest)
}

fn require_flavor(a: &BoundedAngle, accepted: &[AngleFlavor]) -> Result<()> {
    if accepted.contains(&a.flavor) {
        Ok(())
    } else {
        Err(AngleError::InvalidArgument(format!(
            "angle flavor {:?} not accepted here (expected one of {accepted:?})",
            a.flavor
        )))
    }
}

/// Nonlinear small angle theorem: `theta(P) + theta(C) < pi`.
pub fn nonlinear_small_angle(
    theta_p: BoundedAngle,
    theta_c: BoundedAngle,
    opts: RuleOptions,
) -> Result<StabilityCertificate> {
    for a in [&theta_p, &theta_c] {
        a.require_upper()?;
        require_flavor(a, &[AngleFlavor::Standard])?;
    }
    Ok(sum_rule(Method::Thm1, &[theta_p, theta_c], opts))
}

/// Cyclic interconnection: `sum_i theta(P_i) < pi`.
pub fn cyclic_small_angle(
    thetas: &[BoundedAngle],
    opts: RuleOptions,
) -> Result<StabilityCertificate> {
    if thetas.is_empty() {
        return Err(AngleError::Empty(
            "cyclic system needs at least one subsystem",
        ));
    }
    for a in thetas {
        a.require_upper()?;
        require_flavor(a, &[AngleFlavor::Standard])?;
    }
    Ok(sum_rule(Method::Cor1, thetas, opts))
}

/// Multiplier version: `theta_{M1,M2}(P) + theta_{M2,M1}(C) < pi` with `M1`
/// unitary. When `m1_is_identity` the certificate is labelled with the
/// single-multiplier corollary.
pub fn multiplier_small_angle(
    theta_p: BoundedAngle,
    theta_c: BoundedAngle,
    m1_unitary: bool,
    m1_is_identity: bool,
    opts: RuleOptions,
) -> Result<StabilityCertificate> {
    let method = if m1_is_identity {
        Method::Cor4
    } else {
        Method::Thm4
    };
    if !m1_unitary {
        return Ok(StabilityCertificate::not_applicable(
            method,
            "first multiplier is not unitary",
        ));
    }
    for a in [&theta_p, &theta_c] {
        a.require_upper()?;
        require_flavor(a, &[AngleFlavor::Standard, AngleFlavor::Generalized])?;
    }
    Ok(sum_rule(method, &[theta_p, theta_c], opts))
}

/// L2e version: `theta_e(P) + theta_e(C) < pi`.
///
/// A standard-angle upper bound not exceeding `pi/2` is accepted as an L2e
/// bound, since the two angles coincide in that range.
pub fn l2e_small_angle(
    theta_p: BoundedAngle,
    theta_c: BoundedAngle,
    opts: RuleOptions,
) -> Result<StabilityCertificate> {
    for a in [&theta_p, &theta_c] {
        a.require_upper()?;
        let ok = a.flavor == AngleFlavor::L2e
            || (a.flavor == AngleFlavor::Standard && a.value() <= PI / 2.0);
        if !ok {
            return Err(AngleError::InvalidArgument(format!(
                "{:?} bound of {} rad is not an L2e bound",
                a.flavor,
                a.value()
            )));
        }
    }
    Ok(sum_rule(Method::L2e, &[theta_p, theta_c], opts))
}

/// Incremental version: `theta_I(P) + theta_I(C) < pi`. Standard bounds are
/// accepted for linear operands, where both angles are equal.
pub fn incremental_small_angle(
    theta_p: BoundedAngle,
    theta_c: BoundedAngle,
    opts: RuleOptions,
) -> Result<StabilityCertificate> {
    for a in [&theta_p, &theta_c] {
        a.require_upper()?;
        let ok =
            a.flavor == AngleFlavor::Incremental || (a.flavor == AngleFlavor::Standard && a.linear);
        if !ok {
            return Err(AngleError::InvalidArgument(format!(
                "{:?} bound on a nonlinear operand is not an incremental bound",
                a.flavor
            )));
        }
    }
    Ok(sum_rule(Method::Cor5, &[theta_p, theta_c], opts))
}

/// Upper bound on the angle of a cascade: `min(theta1 + theta2, pi)`.
pub fn cascade_angle_bound(theta1: BoundedAngle, theta2: BoundedAngle) -> Result<BoundedAngle> {
    theta1.require_upper()?;
    theta2.require_upper()?;
    let provenance = if theta1.provenance == Provenance::AnalyticUpperBound
        && theta2.provenance == Provenance::AnalyticUpperBound
    {
        Provenance::AnalyticUpperBound
    } else {
        Provenance::CertifiedOverApprox
    };
    Ok(BoundedAngle {
        angle: AngleRadians::saturating(theta1.value() + theta2.value()),
        provenance,
        flavor: AngleFlavor::Standard,
        linear: theta1.linear && theta2.linear,
    })
}

/// Angle bound for the closed-loop map `e1 -> y1`: `max(theta_P, theta_C)`,
/// valid when `theta_P + theta_C <= pi`.
pub fn feedback_angle_closure(
    theta_p: BoundedAngle,
    theta_c: BoundedAngle,
) -> Result<Option<BoundedAngle>> {
    theta_p.require_upper()?;
    theta_c.require_upper()?;
    if theta_p.value() + theta_c.value() > PI {
        return Ok(None);
    }
    let worse = if theta_p.value() >= theta_c.value() {
        theta_p
    } else {
        theta_c
    };
    Ok(Some(BoundedAngle {
        linear: theta_p.linear && theta_c.linear,
        ..worse
    }))
}
