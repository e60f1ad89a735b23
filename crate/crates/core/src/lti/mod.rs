//! Stable real-rational LTI systems and their frequency-domain angles.

mod analysis;
mod discretize;
pub mod poly;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AngleError, Result};
use crate::matrix::{ComplexMatrix, SolverOptions};

pub use analysis::{
    angle_sweep, closed_loop, frequencywise_angle, frequencywise_angle_upper, hinf_singular_angle,
    hinf_small_angle_check, lti_small_angle_check, lure_cone_check, secant_gain,
    system_angle_upper, two_tone_bound, well_posedness_check, HinfAngle, SweepPoint,
};
pub use discretize::{DiscreteStateSpace, Discretization};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// SISO transfer function, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rational {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// A proper real-rational square system. Stability is computed at
/// construction and checked by every operation that needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    ss: StateSpace,
    tf: Option<Rational>,
    max_pole_re: f64,
}

impl LtiSystem {
    pub fn from_state_space(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let m = a.nrows();
        let n = d.nrows();
        if a.ncols() != m {
            return Err(AngleError::InvalidArgument("A must be square".into()));
        }
        if n == 0 || d.ncols() != n {
            return Err(AngleError::InvalidArgument(
                "D must be square and nonempty".into(),
            ));
        }
        if b.nrows() != m || b.ncols() != n || c.nrows() != n || c.ncols() != m {
            return Err(AngleError::InvalidArgument(format!(
                "inconsistent shapes: A {m}x{m}, B {}x{}, C {}x{}, D {n}x{n}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if [&a, &b, &c, &d]
            .iter()
            .any(|x| x.iter().any(|v| !v.is_finite()))
        {
            return Err(AngleError::InvalidArgument(
                "non-finite state-space entry".into(),
            ));
        }
        let max_pole_re = if m == 0 {
            f64::NEG_INFINITY
        } else {
            a.complex_eigenvalues()
                .iter()
                .map(|l| l.re)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        Ok(LtiSystem {
            ss: StateSpace { a, b, c, d },
            tf: None,
            max_pole_re,
        })
    }

    /// SISO system from numerator/denominator coefficients (descending).
    /// Realized in controllable canonical form.
    pub fn from_transfer_function(num: &[f64], den: &[f64]) -> Result<Self> {
        let den_t = poly::trim(den);
        let num_t = poly::trim(num);
        if den_t.is_empty() {
            return Err(AngleError::InvalidArgument("denominator is zero".into()));
        }
        if num.iter().chain(den).any(|v| !v.is_finite()) {
            return Err(AngleError::InvalidArgument("non-finite coefficient".into()));
        }
        let m = den_t.len() - 1;
        if num_t.len() > den_t.len() {
            return Err(AngleError::InvalidArgument(format!(
                "improper transfer function: deg num {} > deg den {m}",
                num_t.len() - 1
            )));
        }
        let lead = den_t[0];
        let a_coef: Vec<f64> = den_t.iter().map(|v| v / lead).collect();
        let mut b_coef = vec![0.0; m + 1 - num_t.len()];
        b_coef.extend(num_t.iter().map(|v| v / lead));
        let d = b_coef[0];
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DMatrix::<f64>::zeros(m, 1);
        let mut c = DMatrix::<f64>::zeros(1, m);
        for j in 0..m {
            a[(0, j)] = -a_coef[j + 1];
            c[(0, j)] = b_coef[j + 1] - d * a_coef[j + 1];
        }
        for i in 1..m {
            a[(i, i - 1)] = 1.0;
        }
        if m > 0 {
            b[(0, 0)] = 1.0;
        }
        let max_pole_re = poly::roots(&den_t)?
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(LtiSystem {
            ss: StateSpace {
                a,
                b,
                c,
                d: DMatrix::from_element(1, 1, d),
            },
            tf: Some(Rational {
                num: num_t,
                den: den_t,
            }),
            max_pole_re,
        })
    }

    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        Self::from_state_space(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, n),
            DMatrix::zeros(n, 0),
            d,
        )
    }

    pub fn siso_gain(k: f64) -> Self {
        Self::from_transfer_function(&[k], &[1.0]).expect("static gain is proper")
    }

    /// Input/output dimension.
    pub fn dim(&self) -> usize {
        self.ss.d.nrows()
    }

    pub fn order(&self) -> usize {
        self.ss.a.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.dim() == 1
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.ss
    }

    pub fn rational(&self) -> Option<&Rational> {
        self.tf.as_ref()
    }

    /// Largest real part among the poles; `-inf` for static systems.
    pub fn max_pole_real(&self) -> f64 {
        self.max_pole_re
    }

    pub(crate) fn require_stable(&self, tol: f64) -> Result<()> {
        if self.max_pole_re < -tol {
            Ok(())
        } else {
            Err(AngleError::Unstable(format!(
                "pole with real part {:.6e} not in the open left half-plane",
                self.max_pole_re
            )))
        }
    }

    /// `P(jw)` without a stability check; `w = inf` gives `D`.
    pub(crate) fn response_unchecked(&self, omega: f64) -> ComplexMatrix {
        if omega.is_infinite() {
            return ComplexMatrix::from_real(&self.ss.d).expect("square D");
        }
        let s = Complex64::new(0.0, omega);
        if let Some(tf) = &self.tf {
            let z = poly::eval(&tf.num, s) / poly::eval(&tf.den, s);
            return ComplexMatrix::new(DMatrix::from_element(1, 1, z)).expect("1x1");
        }
        self.state_space_response(omega)
    }

    pub(crate) fn state_space_response(&self, omega: f64) -> ComplexMatrix {
        let ss = &self.ss;
        let m = self.order();
        let cplx = |x: &DMatrix<f64>| x.map(|v| Complex64::new(v, 0.0));
        let mut resp = cplx(&ss.d);
        if m > 0 {
            let s = Complex64::new(0.0, omega);
            let resolvent = DMatrix::<Complex64>::identity(m, m) * s - cplx(&ss.a);
            let x = resolvent
                .lu()
                .solve(&cplx(&ss.b))
                .expect("resolvent of a stable system is invertible on the imaginary axis");
            resp += cplx(&ss.c) * x;
        }
        ComplexMatrix::new(resp).expect("square response")
    }

    /// Leading term of `P(jw)` as `w -> inf`: `D` if nonzero, otherwise
    /// `(-j)^r C A^(r-1) B` for the first nonzero Markov parameter.
    pub(crate) fn asymptotic_response(&self, tol: f64) -> ComplexMatrix {
        if let Some(tf) = &self.tf {
            let r = tf.den.len() - tf.num.len();
            let lead = tf.num.first().copied().unwrap_or(0.0) / tf.den[0];
            let z = Complex64::new(0.0, -1.0).powi(r as i32) * lead;
            return ComplexMatrix::new(DMatrix::from_element(1, 1, z)).expect("1x1");
        }
        let ss = &self.ss;
        let d_norm = ss.d.norm();
        if d_norm > tol {
            return ComplexMatrix::from_real(&ss.d).expect("square D");
        }
        let scale = ss.c.norm() * ss.b.norm();
        let a_norm = ss.a.norm();
        let mut ak_b = ss.b.clone();
        for r in 1..=self.order() {
            let markov = &ss.c * &ak_b;
            if markov.norm() > 1e-12 * scale * a_norm.powi(r as i32 - 1).max(1.0) {
                let rot = Complex64::new(0.0, -1.0).powi(r as i32);
                return ComplexMatrix::new(markov.map(|v| rot * v)).expect("square Markov");
            }
            ak_b = &ss.a * ak_b;
        }
        ComplexMatrix::from_real(&ss.d).expect("square D")
    }
}

/// `true` iff every pole lies strictly left of `-tol`.
pub fn is_stable(p: &LtiSystem, tol: f64) -> bool {
    p.require_stable(tol).is_ok()
}

/// `P(jw)`; `w = f64::INFINITY` returns the feedthrough `P(inf)`.
pub fn freq_response(p: &LtiSystem, omega: f64, opts: &LtiOptions) -> Result<ComplexMatrix> {
    p.require_stable(opts.stability_tol)?;
    if omega.is_nan() {
        return Err(AngleError::InvalidArgument("omega is NaN".into()));
    }
    Ok(p.response_unchecked(omega))
}

/// Sorted positive frequencies, optionally with `w = 0` and `w = inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    pub include_zero: bool,
    pub include_infinity: bool,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>, include_zero: bool, include_infinity: bool) -> Result<Self> {
        if points.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(AngleError::InvalidArgument(
                "grid points must be finite and > 0".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AngleError::InvalidArgument(
                "grid must be strictly increasing".into(),
            ));
        }
        if points.is_empty() && !include_zero && !include_infinity {
            return Err(AngleError::Empty("frequency grid"));
        }
        Ok(FrequencyGrid {
            points,
            include_zero,
            include_infinity,
        })
    }

    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(AngleError::InvalidArgument(format!(
                "log grid needs 0 < lo < hi and count >= 2 (got {lo}, {hi}, {count})"
            )));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let points = (0..count)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
            .collect();
        Self::new(points, true, true)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Finite evaluation frequencies, `0` first when included.
    pub fn finite(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points.len() + 1);
        if self.include_zero {
            out.push(0.0);
        }
        out.extend_from_slice(&self.points);
        out
    }

    pub fn len(&self) -> usize {
        self.points.len() + self.include_zero as usize + self.include_infinity as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for FrequencyGrid {
    /// 400 log-spaced points on `[1e-3, 1e6]` rad/s plus `0` and `inf`.
    fn default() -> Self {
        Self::log_spaced(1e-3, 1e6, 400).expect("valid default grid")
    }
}

/// Nonlinearity sector `[a, b]` with `b > a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct SectorBound {
    a: f64,
    b: f64,
}

impl SectorBound {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a > 0.0 && b > a {
            Ok(SectorBound { a, b })
        } else {
            Err(AngleError::InvalidSector { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `(f(x) - a x)(f(x) - b x) <= 0`, with a relative tolerance.
    pub fn contains(&self, x: f64, fx: f64) -> bool {
        (fx - self.a * x) * (fx - self.b * x) <= 1e-12 * (self.b * x * x).max(f64::MIN_POSITIVE)
    }
}

impl TryFrom<(f64, f64)> for SectorBound {
    type Error = AngleError;
    fn try_from((a, b): (f64, f64)) -> Result<Self> {
        SectorBound::new(a, b)
    }
}

impl From<SectorBound> for (f64, f64) {
    fn from(s: SectorBound) -> Self {
        (s.a, s.b)
    }
}

/// Tolerances for the LTI analyses.
#[derive(Debug, Clone)]
pub struct LtiOptions {
    /// Poles must satisfy `Re p < -stability_tol`.
    pub stability_tol: f64,
    /// Responses with norm at or below this are treated as zero.
    pub kernel_tol: f64,
    /// Relative interval width at which golden-section refinement stops.
    pub refine_tol: f64,
    /// Grid intervals whose angle sum comes within this of `pi` are bisected.
    pub refine_band: f64,
    pub bisection_depth: usize,
    /// Required clearance for a `certified` verdict.
    pub margin: f64,
    pub matrix: SolverOptions,
}

impl Default for LtiOptions {
    fn default() -> Self {
        LtiOptions {
            stability_tol: 1e-9,
            kernel_tol: 1e-12,
            refine_tol: 1e-9,
            refine_band: 0.1,
            bisection_depth: 12,
            margin: 0.0,
            matrix: SolverOptions::default(),
        }
    }
}
