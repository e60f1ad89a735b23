//! Sampled signals on `t >= 0` and the angles between them.
//!
//! A [`DiscreteSignal`] stands for the piecewise-constant function that
//! takes sample `k` on `[k h, (k + 1) h)` and vanishes afterwards, so the
//! rectangle rule gives its exact L2 inner products.

use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::angle::AngleRadians;
use crate::error::{AngleError, Result};
use crate::lti::{Discretization, LtiSystem};

/// Relative tolerance for treating two sample periods as equal.
const PERIOD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignal {
    /// Row-major, `len * dim` entries.
    data: Vec<f64>,
    dim: usize,
    h: f64,
}

impl DiscreteSignal {
    pub fn from_flat(data: Vec<f64>, dim: usize, h: f64) -> Result<Self> {
        if dim == 0 {
            return Err(AngleError::InvalidArgument(
                "signal dimension must be positive".into(),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(AngleError::InvalidArgument(format!(
                "sample period must be > 0, got {h}"
            )));
        }
        if data.len() % dim != 0 {
            return Err(AngleError::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AngleError::InvalidArgument("non-finite sample".into()));
        }
        Ok(DiscreteSignal { data, dim, h })
    }

    pub fn new(samples: &[Vec<f64>], h: f64) -> Result<Self> {
        let dim = samples.first().map_or(1, Vec::len);
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(AngleError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::from_flat(samples.concat(), dim, h)
    }

    pub fn scalar(values: Vec<f64>, h: f64) -> Result<Self> {
        Self::from_flat(values, 1, h)
    }

    pub fn zeros(len: usize, dim: usize, h: f64) -> Result<Self> {
        Self::from_flat(vec![0.0; len * dim], dim, h)
    }

    /// Samples `f(t_k)` for `t_k = k h`, `k < len`.
    pub fn from_fn(len: usize, dim: usize, h: f64, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(len * dim);
        for k in 0..len {
            let x = f(k as f64 * h);
            if x.len() != dim {
                return Err(AngleError::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            data.extend(x);
        }
        Self::from_flat(data, dim, h)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_period(&self) -> f64 {
        self.h
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn scale(&self, k: f64) -> Self {
        DiscreteSignal {
            data: self.data.iter().map(|v| k * v).collect(),
            ..*self
        }
    }

    /// `self + k * other`, zero-extending the shorter operand.
    pub fn add_scaled(&self, k: f64, other: &DiscreteSignal) -> Result<Self> {
        compatible(self, other)?;
        let n = self.data.len().max(other.data.len());
        let data = (0..n)
            .map(|i| {
                self.data.get(i).copied().unwrap_or(0.0)
                    + k * other.data.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Ok(DiscreteSignal {
            data,
            dim: self.dim,
            h: self.h,
        })
    }

    /// Appends `extra` zero samples.
    pub fn zero_padded(&self, extra: usize) -> Self {
        let mut data = self.data.clone();
        data.resize(data.len() + extra * self.dim, 0.0);
        DiscreteSignal { data, ..*self }
    }

    /// First `len` samples, zero-extended if `len` exceeds the length.
    pub fn resized(&self, len: usize) -> Self {
        let mut data = self.data.clone();
        data.resize(len * self.dim, 0.0);
        DiscreteSignal { data, ..*self }
    }

    /// Time of the last sample, `0` for an empty signal.
    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.h
    }
}

fn compatible(u: &DiscreteSignal, v: &DiscreteSignal) -> Result<()> {
    if u.dim != v.dim {
        return Err(AngleError::DimensionMismatch {
            expected: u.dim,
            got: v.dim,
        });
    }
    if (u.h - v.h).abs() > PERIOD_RTOL * u.h.max(v.h) {
        return Err(AngleError::SamplePeriodMismatch(u.h, v.h));
    }
    Ok(())
}

/// `h * sum_k u_k . v_k`, the shorter signal zero-extended.
pub fn inner_product(u: &DiscreteSignal, v: &DiscreteSignal) -> Result<f64> {
    compatible(u, v)?;
    Ok(u.h * u.data.iter().zip(&v.data).map(|(a, b)| a * b).sum::<f64>())
}

pub fn l2_norm(u: &DiscreteSignal) -> f64 {
    energy(u).sqrt()
}

/// Keeps the samples at times `t <= t_cut` and zeroes the rest.
pub fn truncate(u: &DiscreteSignal, t_cut: f64) -> Result<DiscreteSignal> {
    if t_cut.is_nan() || t_cut < 0.0 {
        return Err(AngleError::InvalidArgument(format!(
            "truncation time must be >= 0, got {t_cut}"
        )));
    }
    let keep = ((t_cut / u.h) * (1.0 + PERIOD_RTOL)).floor();
    let keep = if keep >= u.len() as f64 {
        u.len()
    } else {
        keep as usize + 1
    };
    let mut out = u.clone();
    out.data[keep * u.dim..].iter_mut().for_each(|v| *v = 0.0);
    Ok(out)
}

/// Angle between two signals; `0` when either is zero.
pub fn signal_angle(u: &DiscreteSignal, v: &DiscreteSignal) -> Result<AngleRadians> {
    let ip = inner_product(u, v)?;
    let (uu, vv) = (energy(u), energy(v));
    if uu == 0.0 || vv == 0.0 {
        return Ok(AngleRadians::ZERO);
    }
    Ok(AngleRadians::from_cos(cos_from_energies(ip, uu, vv)))
}

/// `h * sum |u_k|^2`.
pub(crate) fn energy(u: &DiscreteSignal) -> f64 {
    u.h * u.data.iter().map(|a| a * a).sum::<f64>()
}

/// `ip / sqrt(uu vv)`, which is exactly `+-1` for parallel signals.
pub(crate) fn cos_from_energies(ip: f64, uu: f64, vv: f64) -> f64 {
    let den = (uu * vv).sqrt();
    let den = if den.is_finite() && den > 0.0 {
        den
    } else {
        uu.sqrt() * vv.sqrt()
    };
    (ip / den).clamp(-1.0, 1.0)
}

/// A stable, boundedly invertible LTI operator used to reshape signals
/// before measuring angles.
#[derive(Debug, Clone)]
pub struct MultiplierOperator {
    realization: LtiSystem,
    unitary: bool,
    method: Discretization,
}

/// Relative energy error tolerated when checking a unitary claim.
const UNITARY_RTOL: f64 = 1e-6;

impl MultiplierOperator {
    /// Wraps a stable realization. A unitary claim is tested on seeded
    /// probe signals, and rejected if any probe changes its energy.
    pub fn new(realization: LtiSystem, unitary: bool) -> Result<Self> {
        realization.require_stable(1e-9)?;
        let m = MultiplierOperator {
            realization,
            unitary,
            method: Discretization::Bilinear,
        };
        if unitary {
            m.verify_unitary(0.01)?;
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let gain = LtiSystem::static_gain(nalgebra::DMatrix::identity(dim, dim))
            .expect("identity is a valid gain");
        MultiplierOperator {
            realization: gain,
            unitary: true,
            method: Discretization::Bilinear,
        }
    }

    pub fn with_discretization(mut self, method: Discretization) -> Self {
        self.method = method;
        self
    }

    pub fn realization(&self) -> &LtiSystem {
        &self.realization
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_identity(&self) -> bool {
        let ss = self.realization.state_space();
        let n = self.realization.dim();
        ss.a.nrows() == 0 && ss.d == nalgebra::DMatrix::identity(n, n)
    }

    pub fn dim(&self) -> usize {
        self.realization.dim()
    }

    /// `M u` on the same time span as `u`.
    pub fn apply(&self, u: &DiscreteSignal) -> Result<DiscreteSignal> {
        self.apply_padded(u, 0)
    }

    /// `M u` with `extra` trailing samples so the transient can decay.
    pub fn apply_padded(&self, u: &DiscreteSignal, extra: usize) -> Result<DiscreteSignal> {
        if u.dim() != self.dim() {
            return Err(AngleError::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        let d = self
            .realization
            .discretize(u.sample_period(), self.method)?;
        let padded = u.zero_padded(extra);
        DiscreteSignal::from_flat(d.simulate(padded.as_flat()), u.dim(), u.sample_period())
    }

    fn verify_unitary(&self, h: f64) -> Result<()> {
        let d = self.realization.discretize(h, self.method)?;
        let tail = d.settling_steps(1e-10).min(200_000);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = self.dim();
        let len = 256;
        let mut probes = Vec::new();
        for i in 0..4 {
            let w = 0.5 * (i + 1) as f64;
            probes.push(DiscreteSignal::from_fn(len, n, h, |t| {
                vec![(w * t).sin(); n]
            })?);
        }
        for _ in 0..4 {
            let data = (0..len * n)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            probes.push(DiscreteSignal::from_flat(data, n, h)?);
        }
        for (i, u) in probes.iter().enumerate() {
            let y = self.apply_padded(u, tail)?;
            let (nu, ny) = (l2_norm(u), l2_norm(&y));
            if (nu - ny).abs() > UNITARY_RTOL * nu.max(1e-300) {
                return Err(AngleError::InvalidArgument(format!(
                    "multiplier declared unitary changes the norm of probe {i}: {nu:.9e} -> {ny:.9e}"
                )));
            }
        }
        Ok(())
    }
}

/// `theta(M1 u, M2 v)`.
pub fn generalized_signal_angle(
    u: &DiscreteSignal,
    v: &DiscreteSignal,
    m1: &MultiplierOperator,
    m2: &MultiplierOperator,
) -> Result<AngleRadians> {
    signal_angle(&m1.apply(u)?, &m2.apply(v)?)
}

/// Reads `t, x1, ..., xn` rows with a header line. Times must start at
/// `0` and be uniform within a relative tolerance of `1e-9`.
pub fn read_signal_csv(reader: impl Read) -> Result<DiscreteSignal> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| AngleError::Parse(e.to_string()))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("t") {
        return Err(AngleError::Parse("expected header `t, x1, ..., xn`".into()));
    }
    let dim = headers.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AngleError::Parse(e.to_string()))?;
        let mut vals = rec.iter().map(|s| {
            s.parse::<f64>()
                .map_err(|_| AngleError::Parse(format!("row {}: not a number: {s:?}", line + 2)))
        });
        times.push(vals.next().transpose()?.unwrap_or(f64::NAN));
        for v in vals {
            data.push(v?);
        }
    }
    if times.len() < 2 {
        return Err(AngleError::Parse(
            "need at least two samples to infer the period".into(),
        ));
    }
    if times[0].abs() > 1e-12 {
        return Err(AngleError::Parse(format!(
            "time column must start at 0, got {}",
            times[0]
        )));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (k, t) in times.iter().enumerate() {
        if (t - k as f64 * h).abs() > 1e-9 * h.max(t.abs()) {
            return Err(AngleError::Parse(format!(
                "non-uniform time column at row {}",
                k + 2
            )));
        }
    }
    DiscreteSignal::from_flat(data, dim, h)
}

pub fn load_signal_csv(path: impl AsRef<Path>) -> Result<DiscreteSignal> {
    let f = std::fs::File::open(path.as_ref())
        .map_err(|e| AngleError::Parse(format!("{}: {e}", path.as_ref().display())))?;
    read_signal_csv(f)
}
