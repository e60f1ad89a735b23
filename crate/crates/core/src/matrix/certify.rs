//! Certified over-approximation of the matrix singular angle.
//!
//! With `H = (A + A*)/2` and `t = |Ax|/|x|`, the AM-GM identity
//! `|x||Ax| = min_t (t|x|^2 + |Ax|^2/t)/2` turns `Re(x*Ax) >= c|x||Ax|` into
//! Hermitian semidefinite conditions:
//!
//! * `c >= 0`: it suffices that `H - c K(t) >= 0` for one `t > 0`, where
//!   `K(t) = (t I + A*A/t)/2`.
//! * `c < 0`: it is necessary and sufficient that `H + |c| K(t) >= 0` for all
//!   `t` in `[sigma_min, sigma_max]`; on a grid interval `[t_k, t_k+1]` the
//!   matrix `(t_k I + A*A/t_k+1)/2` is dominated by every `K(t)`, so checking it
//!   per interval is sound.
//!
//! Either way the result is a lower bound on `cos theta(A)`.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{hpd_singular_angle_oracle, ComplexMatrix, SolverOptions};
use crate::angle::AngleRadians;
use crate::error::{AngleError, Result};

/// Guard subtracted from computed cosine bounds to absorb eigenvalue rounding.
const ROUNDING_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyRoute {
    HpdClosedForm,
    PositiveCone,
    IntervalGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedAngle {
    /// Upper bound on `theta(A)`.
    pub angle: AngleRadians,
    /// Lower bound on `cos theta(A)`.
    pub cos_lower: f64,
    pub route: CertifyRoute,
}

/// Smallest generalized eigenvalue of `(H, K)` with `K` positive definite.
fn min_generalized_eig(h: &DMatrix<Complex64>, k: &DMatrix<Complex64>) -> Option<f64> {
    let chol = Cholesky::new(k.clone())?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let m = &linv * h * linv.adjoint();
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Some(m.symmetric_eigenvalues().min())
}

fn k_matrix(aa: &DMatrix<Complex64>, t_lo: f64, t_hi: f64) -> DMatrix<Complex64> {
    let n = aa.nrows();
    (DMatrix::<Complex64>::identity(n, n) * Complex64::new(t_lo, 0.0)
        + aa * Complex64::new(1.0 / t_hi, 0.0))
        * Complex64::new(0.5, 0.0)
}

/// Certified upper bound on `theta(A)`.
pub fn certified_angle_upper(a: &ComplexMatrix, opts: &SolverOptions) -> Result<CertifiedAngle> {
    if a.is_zero() {
        return Err(AngleError::ZeroMatrix);
    }
    if let Ok(exact) = hpd_singular_angle_oracle(a) {
        return Ok(CertifiedAngle {
            angle: exact,
            cos_lower: exact.cos(),
            route: CertifyRoute::HpdClosedForm,
        });
    }

    let m = a.as_matrix();
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let aa = m.ad_mul(m);
    let sv = m.clone().singular_values();
    let s_max = sv.max();
    let t_lo = sv.min().max(opts.kernel_tol * s_max);
    let t_hi = s_max.max(t_lo);

    // c >= 0: maximise over log t; any t is valid.
    let c_at = |log_t: f64| {
        let t = log_t.exp();
        min_generalized_eig(&herm, &k_matrix(&aa, t, t)).unwrap_or(f64::NEG_INFINITY)
    };
    let (lo, hi) = (t_lo.ln(), t_hi.ln());
    let probes = 33;
    let mut best_c = f64::NEG_INFINITY;
    let mut best_i = 0;
    for i in 0..probes {
        let s = lo + (hi - lo) * i as f64 / (probes - 1) as f64;
        let c = c_at(s);
        if c > best_c {
            best_c = c;
            best_i = i;
        }
    }
    if hi > lo {
        let step = (hi - lo) / (probes - 1) as f64;
        let centre = lo + step * best_i as f64;
        let (c, _) = golden_max(
            &c_at,
            (centre - step).max(lo),
            (centre + step).min(hi),
            1e-10,
        );
        best_c = best_c.max(c);
    }
    if best_c > ROUNDING_GUARD {
        let cos_lower = (best_c - ROUNDING_GUARD).min(1.0);
        return Ok(CertifiedAngle {
            angle: AngleRadians::from_cos(cos_lower),
            cos_lower,
            route: CertifyRoute::PositiveCone,
        });
    }

    // c < 0: every t interval must pass.
    let intervals = if hi > lo {
        opts.certify_intervals.max(1)
    } else {
        1
    };
    let mut need: f64 = 0.0;
    for k in 0..intervals {
        let t0 = (lo + (hi - lo) * k as f64 / intervals as f64).exp();
        let t1 = (lo + (hi - lo) * (k + 1) as f64 / intervals as f64).exp();
        let lam = min_generalized_eig(&herm, &k_matrix(&aa, t0, t1)).unwrap_or(f64::NEG_INFINITY);
        need = need.max(-lam);
        if need >= 1.0 {
            break;
        }
    }
    let cos_lower = (-(need + ROUNDING_GUARD)).max(-1.0);
    Ok(CertifiedAngle {
        angle: AngleRadians::from_cos(cos_lower),
        cos_lower,
        route: CertifyRoute::IntervalGrid,
    })
}

/// Golden-section maximisation of a unimodal-ish function on `[a, b]`.
pub(crate) fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = if f1 >= f2 { (f1, x1) } else { (f2, x2) };
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        if f1 > best.0 {
            best = (f1, x1);
        }
        if f2 > best.0 {
            best = (f2, x2);
        }
    }
    best
}
