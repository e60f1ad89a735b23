//! Sampled-data surrogates of continuous-time state-space systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LtiSystem;
use crate::error::{AngleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Exact for piecewise-constant inputs.
    #[default]
    ZeroOrderHold,
    /// Tustin transform; maps all-pass systems to all-pass systems.
    Bilinear,
}

/// `x[k+1] = Ad x[k] + Bd u[k]`, `y[k] = Cd x[k] + Dd u[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpace {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub cd: DMatrix<f64>,
    pub dd: DMatrix<f64>,
    pub h: f64,
    pub method: Discretization,
}

impl LtiSystem {
    pub fn discretize(&self, h: f64, method: Discretization) -> Result<DiscreteStateSpace> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(AngleError::InvalidArgument(format!(
                "sample period {h} must be positive"
            )));
        }
        let ss = self.state_space();
        let (m, n) = (ss.a.nrows(), ss.d.nrows());
        let (ad, bd, cd, dd) = match method {
            Discretization::ZeroOrderHold => {
                let mut aug = DMatrix::<f64>::zeros(m + n, m + n);
                aug.view_mut((0, 0), (m, m)).copy_from(&(&ss.a * h));
                aug.view_mut((0, m), (m, n)).copy_from(&(&ss.b * h));
                let e = aug.exp();
                (
                    e.view((0, 0), (m, m)).into_owned(),
                    e.view((0, m), (m, n)).into_owned(),
                    ss.c.clone(),
                    ss.d.clone(),
                )
            }
            Discretization::Bilinear => {
                let half = &ss.a * (h / 2.0);
                let left = DMatrix::<f64>::identity(m, m) - &half;
                let inv = left
                    .try_inverse()
                    .ok_or_else(|| AngleError::Numerical("I - A h/2 is singular".into()))?;
                let ad = &inv * (DMatrix::<f64>::identity(m, m) + &half);
                let bd = &inv * &ss.b * h;
                let cd = &ss.c * &inv;
                let dd = &ss.d + &ss.c * &inv * &ss.b * (h / 2.0);
                (ad, bd, cd, dd)
            }
        };
        Ok(DiscreteStateSpace {
            ad,
            bd,
            cd,
            dd,
            h,
            method,
        })
    }
}

impl DiscreteStateSpace {
    pub fn order(&self) -> usize {
        self.ad.nrows()
    }

    pub fn dim(&self) -> usize {
        self.dd.nrows()
    }

    pub fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.cd * x + &self.dd * u
    }

    pub fn advance(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.ad * x + &self.bd * u
    }

    /// Steps after which the free response has shrunk by about `eps`,
    /// judged by the spectral radius of `Ad`.
    pub fn settling_steps(&self, eps: f64) -> usize {
        if self.order() == 0 {
            return 0;
        }
        let rho = self
            .ad
            .complex_eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max);
        if rho <= 0.0 {
            return self.order();
        }
        if rho >= 1.0 {
            return usize::MAX;
        }
        let steps = (eps.ln() / rho.ln()).ceil();
        if steps.is_finite() && steps < usize::MAX as f64 {
            steps as usize + self.order()
        } else {
            usize::MAX
        }
    }

    /// Runs from rest over a flat row-major sample buffer.
    pub fn simulate(&self, input: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = DVector::<f64>::zeros(self.order());
        let mut out = Vec::with_capacity(input.len());
        for chunk in input.chunks(n) {
            let u = DVector::from_column_slice(chunk);
            out.extend(self.output(&x, &u).iter());
            x = self.advance(&x, &u);
        }
        out
    }
}
