//! Frequency-domain angles and the LTI small-angle checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{FrequencyGrid, LtiOptions, LtiSystem, SectorBound};
use crate::angle::AngleRadians;
use crate::certificate::{BoundedAngle, InputsDigest, Method, StabilityCertificate, Tier};
use crate::error::{AngleError, Result};
use crate::matrix::certify::golden_max;
use crate::matrix::{
    certified_angle_upper, hpd_singular_angle_oracle, matrix_singular_angle, ComplexMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// Best value found by the nonconvex search (MIMO) or exact (SISO).
    Search,
    /// Certified over-approximation per frequency.
    Upper,
}

fn response_angle(resp: &ComplexMatrix, opts: &LtiOptions, mode: Mode) -> Result<f64> {
    if resp.norm2() <= opts.kernel_tol {
        return Ok(0.0);
    }
    if resp.n() == 1 {
        let z = resp.as_matrix()[(0, 0)];
        return Ok(z.im.atan2(z.re).abs());
    }
    let angle = match mode {
        Mode::Search => matrix_singular_angle(resp, &opts.matrix)?.angle,
        Mode::Upper => certified_angle_upper(resp, &opts.matrix)?.angle,
    };
    Ok(angle.value())
}

/// Angle used by the H-infinity supremum at `omega`; at infinity this is
/// the limit of `theta(P(jw))`, which need not equal `theta(P(inf))`.
fn sup_angle(p: &LtiSystem, omega: f64, opts: &LtiOptions, mode: Mode) -> Result<f64> {
    if omega.is_infinite() {
        response_angle(&p.asymptotic_response(opts.kernel_tol), opts, mode)
    } else {
        response_angle(&p.response_unchecked(omega), opts, mode)
    }
}

/// `theta(P(jw))`, zero where the response vanishes.
pub fn frequencywise_angle(p: &LtiSystem, omega: f64, opts: &LtiOptions) -> Result<AngleRadians> {
    p.require_stable(opts.stability_tol)?;
    Ok(AngleRadians::saturating(response_angle(
        &p.response_unchecked(omega),
        opts,
        Mode::Search,
    )?))
}

/// Upper bound on `theta(P(jw))`; exact for SISO systems.
pub fn frequencywise_angle_upper(
    p: &LtiSystem,
    omega: f64,
    opts: &LtiOptions,
) -> Result<AngleRadians> {
    p.require_stable(opts.stability_tol)?;
    Ok(AngleRadians::saturating(response_angle(
        &p.response_unchecked(omega),
        opts,
        Mode::Upper,
    )?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub angle: f64,
    pub cos_theta: f64,
}

/// Frequency-wise angle at every grid point, `0` and `inf` included when flagged.
pub fn angle_sweep(
    p: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<Vec<SweepPoint>> {
    p.require_stable(opts.stability_tol)?;
    let mut omegas = grid.finite();
    if grid.include_infinity {
        omegas.push(f64::INFINITY);
    }
    omegas
        .par_iter()
        .map(|&w| {
            let angle = sup_angle(p, w, opts, Mode::Search)?;
            Ok(SweepPoint {
                omega: w,
                angle,
                cos_theta: angle.cos(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HinfAngle {
    pub angle: AngleRadians,
    pub cos_theta: f64,
    /// `f64::INFINITY` when the supremum is approached as `w -> inf`.
    pub argmax_omega: f64,
}

fn hinf_impl(
    p: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
    mode: Mode,
) -> Result<HinfAngle> {
    p.require_stable(opts.stability_tol)?;
    let finite = grid.finite();
    let angles: Vec<f64> = finite
        .par_iter()
        .map(|&w| sup_angle(p, w, opts, mode))
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    let mut best_idx = None;
    for (k, (&w, &a)) in finite.iter().zip(&angles).enumerate() {
        if a > best.0 {
            best = (a, w);
            best_idx = Some(k);
        }
    }
    if let Some(k) = best_idx {
        let lo = if k > 0 { finite[k - 1] } else { finite[k] };
        let hi = if k + 1 < finite.len() {
            finite[k + 1]
        } else {
            finite[k]
        };
        if hi > lo {
            let refined = refine_max(lo, hi, opts.refine_tol, &|w| {
                sup_angle(p, w, opts, mode).unwrap_or(f64::NEG_INFINITY)
            });
            if refined.0 > best.0 {
                best = refined;
            }
        }
    }
    if grid.include_infinity {
        let a = sup_angle(p, f64::INFINITY, opts, mode)?;
        if a > best.0 {
            best = (a, f64::INFINITY);
        }
    }
    let angle = AngleRadians::saturating(best.0);
    Ok(HinfAngle {
        angle,
        cos_theta: angle.cos(),
        argmax_omega: best.1,
    })
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`, in
/// `log w` when `lo > 0`. Returns `(value, omega)`.
fn refine_max(lo: f64, hi: f64, tol: f64, f: &(dyn Fn(f64) -> f64 + Sync)) -> (f64, f64) {
    if lo > 0.0 {
        let (v, x) = golden_max(&|x: f64| f(x.exp()), lo.ln(), hi.ln(), tol);
        (v, x.exp())
    } else {
        golden_max(&|w| f(w), lo, hi, tol)
    }
}

/// `sup_w theta(P(jw))` over the grid, refined around the best grid point.
///
/// The point at infinity uses the limit of the angle as `w -> inf`, so a
/// strictly proper `1/(s+1)` reports `pi/2` there.
pub fn hinf_singular_angle(
    p: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<HinfAngle> {
    hinf_impl(p, grid, opts, Mode::Search)
}

fn same_dim(p: &LtiSystem, c: &LtiSystem) -> Result<()> {
    if p.dim() != c.dim() {
        return Err(AngleError::DimensionMismatch {
            expected: p.dim(),
            got: c.dim(),
        });
    }
    Ok(())
}

fn feedthrough_det(p: &LtiSystem, c: &LtiSystem) -> (f64, f64) {
    let dp = &p.state_space().d;
    let dc = &c.state_space().d;
    let m = DMatrix::<f64>::identity(p.dim(), p.dim()) + dc * dp;
    let tol = 1e-9 * (1.0 + dc.norm() * dp.norm());
    (m.determinant(), tol)
}

/// `det(I + C(inf) P(inf)) != 0`, relative to the feedthrough sizes.
pub fn well_posedness_check(p: &LtiSystem, c: &LtiSystem) -> Result<bool> {
    same_dim(p, c)?;
    let (det, tol) = feedthrough_det(p, c);
    Ok(det.abs() > tol)
}

fn loop_preconditions(p: &LtiSystem, c: &LtiSystem, opts: &LtiOptions) -> Result<()> {
    same_dim(p, c)?;
    p.require_stable(opts.stability_tol)?;
    c.require_stable(opts.stability_tol)?;
    let (det, tol) = feedthrough_det(p, c);
    if det.abs() <= tol {
        return Err(AngleError::IllPosed(det));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    omega: f64,
    value: f64,
}

/// Evaluates `f` on the finite grid points, then bisects every interval
/// with an endpoint above `alarm`, always descending into the half with
/// the larger endpoint value.
fn sample_with_bisection(
    finite: &[f64],
    alarm: f64,
    depth: usize,
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<Vec<Sample>> {
    let base: Vec<Sample> = finite
        .par_iter()
        .map(|&w| {
            Ok(Sample {
                omega: w,
                value: f(w)?,
            })
        })
        .collect::<Result<_>>()?;
    let extra: Vec<Vec<Sample>> = base
        .par_windows(2)
        .filter(|w| w[0].value.max(w[1].value) > alarm)
        .map(|w| {
            let (mut a, mut b) = (w[0], w[1]);
            let mut out = Vec::with_capacity(depth);
            for _ in 0..depth {
                let mid = if a.omega > 0.0 {
                    (a.omega * b.omega).sqrt()
                } else {
                    0.5 * (a.omega + b.omega)
                };
                let m = Sample {
                    omega: mid,
                    value: f(mid)?,
                };
                out.push(m);
                if a.value >= b.value {
                    b = m;
                } else {
                    a = m;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all = base;
    all.extend(extra.into_iter().flatten());
    Ok(all)
}

fn digest_system(d: InputsDigest, p: &LtiSystem) -> InputsDigest {
    let ss = p.state_space();
    let mut d = d.f64(p.order() as f64).f64(p.dim() as f64);
    for m in [&ss.a, &ss.b, &ss.c, &ss.d] {
        d = d.f64s(m.iter());
    }
    d
}

fn digest_grid(d: InputsDigest, grid: &FrequencyGrid) -> InputsDigest {
    d.f64s(grid.points().iter())
        .f64(grid.include_zero as u8 as f64)
        .f64(grid.include_infinity as u8 as f64)
}

struct LoopWorst {
    margin: f64,
    omega: f64,
    theta_p: f64,
    theta_c: f64,
    evaluations: usize,
    max_p: f64,
    max_c: f64,
}

fn loop_sweep(
    p: &LtiSystem,
    c: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<LoopWorst> {
    let pair = |w: f64| -> Result<(f64, f64)> {
        Ok((
            response_angle(&p.response_unchecked(w), opts, Mode::Upper)?,
            response_angle(&c.response_unchecked(w), opts, Mode::Upper)?,
        ))
    };
    let samples = sample_with_bisection(
        &grid.finite(),
        PI - opts.refine_band,
        opts.bisection_depth,
        &|w| pair(w).map(|(a, b)| a + b),
    )?;
    let mut worst = LoopWorst {
        margin: f64::INFINITY,
        omega: f64::NAN,
        theta_p: 0.0,
        theta_c: 0.0,
        evaluations: samples.len(),
        max_p: 0.0,
        max_c: 0.0,
    };
    let mut consider = |w: f64, tp: f64, tc: f64| {
        worst.max_p = worst.max_p.max(tp);
        worst.max_c = worst.max_c.max(tc);
        if PI - (tp + tc) < worst.margin {
            worst.margin = PI - (tp + tc);
            worst.omega = w;
            worst.theta_p = tp;
            worst.theta_c = tc;
        }
    };
    for s in &samples {
        let (tp, tc) = pair(s.omega)?;
        consider(s.omega, tp, tc);
    }
    if grid.include_infinity {
        // the loop condition at infinity concerns the actual feedthroughs
        let (tp, tc) = pair(f64::INFINITY)?;
        worst.evaluations += 1;
        consider(f64::INFINITY, tp, tc);
    }
    Ok(worst)
}

/// Frequency-wise small angle condition: `theta(P(jw)) + theta(C(jw)) < pi`
/// at every evaluated frequency.
///
/// Intervals whose angle sum comes within `refine_band` of `pi` are
/// bisected. The verdict is `certified` on the grid tier only.
pub fn lti_small_angle_check(
    p: &LtiSystem,
    c: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<StabilityCertificate> {
    loop_preconditions(p, c, opts)?;
    let worst = loop_sweep(p, c, grid, opts)?;
    let digest = digest_grid(
        digest_system(digest_system(InputsDigest::new("thm3"), p), c),
        grid,
    )
    .f64(opts.margin);
    Ok(
        StabilityCertificate::decide(Method::Thm3, worst.margin, opts.margin)
            .with_critical_omega(worst.omega)
            .with_tier(Tier::Grid)
            .with_witness("theta_p", worst.theta_p)
            .with_witness("theta_c", worst.theta_c)
            .with_witness("grid_points", grid.len() as f64)
            .with_witness("evaluations", worst.evaluations as f64)
            .with_seed(opts.matrix.seed)
            .with_digest(digest),
    )
}

/// H-infinity small angle condition: `theta_inf(P) + theta_inf(C) < pi`.
///
/// Every frequency evaluated by [`lti_small_angle_check`] also enters the
/// suprema, so a certificate here implies one there.
pub fn hinf_small_angle_check(
    p: &LtiSystem,
    c: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<StabilityCertificate> {
    loop_preconditions(p, c, opts)?;
    let hp = hinf_impl(p, grid, opts, Mode::Upper)?;
    let hc = hinf_impl(c, grid, opts, Mode::Upper)?;
    let worst = loop_sweep(p, c, grid, opts)?;
    let (tp, tc) = (
        hp.angle.value().max(worst.max_p),
        hc.angle.value().max(worst.max_c),
    );
    let critical = if tp >= tc {
        hp.argmax_omega
    } else {
        hc.argmax_omega
    };
    let digest = digest_grid(
        digest_system(digest_system(InputsDigest::new("cor3"), p), c),
        grid,
    )
    .f64(opts.margin);
    Ok(
        StabilityCertificate::decide(Method::Cor3, PI - (tp + tc), opts.margin)
            .with_critical_omega(critical)
            .with_tier(Tier::Grid)
            .with_witness("theta_inf_p", tp)
            .with_witness("theta_inf_c", tc)
            .with_witness("argmax_omega_p", hp.argmax_omega)
            .with_witness("argmax_omega_c", hc.argmax_omega)
            .with_seed(opts.matrix.seed)
            .with_digest(digest),
    )
}

/// State-space realization of `G = P (I + C P)^-1`, the map from `e1` to `y1`.
pub fn closed_loop(p: &LtiSystem, c: &LtiSystem) -> Result<LtiSystem> {
    let opts = LtiOptions::default();
    loop_preconditions(p, c, &opts)?;
    let (sp, sc) = (p.state_space(), c.state_space());
    let n = p.dim();
    let (mp, mc) = (p.order(), c.order());
    let r = (DMatrix::<f64>::identity(n, n) + &sc.d * &sp.d)
        .try_inverse()
        .ok_or(AngleError::IllPosed(0.0))?;
    // u1 = R e1 - R Dc Cp xp - R Cc xc
    let u_xp = -(&r * &sc.d * &sp.c);
    let u_xc = -(&r * &sc.c);
    let u_e = r.clone();
    // y1 = Cp xp + Dp u1
    let y_xp = &sp.c + &sp.d * &u_xp;
    let y_xc = &sp.d * &u_xc;
    let y_e = &sp.d * &u_e;

    let m = mp + mc;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DMatrix::<f64>::zeros(m, n);
    let mut cc = DMatrix::<f64>::zeros(n, m);
    a.view_mut((0, 0), (mp, mp))
        .copy_from(&(&sp.a + &sp.b * &u_xp));
    a.view_mut((0, mp), (mp, mc)).copy_from(&(&sp.b * &u_xc));
    a.view_mut((mp, 0), (mc, mp)).copy_from(&(&sc.b * &y_xp));
    a.view_mut((mp, mp), (mc, mc))
        .copy_from(&(&sc.a + &sc.b * &y_xc));
    b.view_mut((0, 0), (mp, n)).copy_from(&(&sp.b * &u_e));
    b.view_mut((mp, 0), (mc, n)).copy_from(&(&sc.b * &y_e));
    cc.view_mut((0, 0), (n, mp)).copy_from(&y_xp);
    cc.view_mut((0, mp), (n, mc)).copy_from(&y_xc);
    LtiSystem::from_state_space(a, b, cc, y_e)
}

/// Lur'e cone condition for a sector `[a, b]` nonlinearity in feedback
/// with `tau P` for every `tau > 0`: `|arg P(jw)| < pi - arccos(2 sqrt(ab) / (a + b))`.
pub fn lure_cone_check(
    p: &LtiSystem,
    sector: SectorBound,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<StabilityCertificate> {
    if !p.is_siso() {
        return Err(AngleError::NotSiso(p.dim()));
    }
    p.require_stable(opts.stability_tol)?;
    let (a, b) = (sector.a(), sector.b());
    let half = PI - (2.0 * (a * b).sqrt() / (a + b)).min(1.0).acos();
    let phase =
        |w: f64| -> Result<f64> { response_angle(&p.response_unchecked(w), opts, Mode::Search) };
    let mut samples = sample_with_bisection(
        &grid.finite(),
        half - opts.refine_band,
        opts.bisection_depth,
        &phase,
    )?;
    if grid.include_infinity {
        samples.push(Sample {
            omega: f64::INFINITY,
            value: phase(f64::INFINITY)?,
        });
    }
    let worst = samples.iter().copied().fold(
        Sample {
            omega: f64::NAN,
            value: f64::NEG_INFINITY,
        },
        |acc, s| {
            if s.value > acc.value {
                s
            } else {
                acc
            }
        },
    );
    let digest = digest_grid(digest_system(InputsDigest::new("cor2"), p), grid)
        .f64(a)
        .f64(b)
        .f64(opts.margin);
    Ok(
        StabilityCertificate::decide(Method::Cor2, half - worst.value, opts.margin)
            .with_critical_omega(worst.omega)
            .with_tier(Tier::Grid)
            .with_witness("cone_half_angle", half)
            .with_witness("max_abs_phase", worst.value)
            .with_witness("evaluations", samples.len() as f64)
            .with_digest(digest),
    )
}

/// Upper bound on `cos theta(P)` from a two-tone probe carrying a share
/// `tau` of its energy at `w0` and `1 - tau` at `w1`.
pub fn two_tone_bound(p: &LtiSystem, w0: f64, w1: f64, tau: f64, opts: &LtiOptions) -> Result<f64> {
    if !p.is_siso() {
        return Err(AngleError::NotSiso(p.dim()));
    }
    p.require_stable(opts.stability_tol)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(AngleError::InvalidArgument(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    let z = |w: f64| -> Result<Complex64> {
        let z = p.response_unchecked(w).as_matrix()[(0, 0)];
        if z.norm() <= opts.kernel_tol {
            Err(AngleError::ZeroResponse(w))
        } else {
            Ok(z)
        }
    };
    let (z0, z1) = (z(w0)?, z(w1)?);
    let num = tau * z0.re + (1.0 - tau) * z1.re;
    let den = (tau * z0.norm_sqr() + (1.0 - tau) * z1.norm_sqr()).sqrt();
    Ok(num / den)
}

/// Upper bound on the time-domain angle `theta(P)` of a stable LTI system.
///
/// If the frequency-wise angles never exceed `pi/2` the system is passive
/// and `pi/2` bounds `theta(P)`. For SISO systems with a larger H-infinity
/// angle the two angles coincide. Otherwise only the trivial `pi` is known.
/// A static Hermitian positive definite gain gets its exact closed form,
/// since stacking it over time does not change its extreme eigenvalues.
pub fn system_angle_upper(
    p: &LtiSystem,
    grid: &FrequencyGrid,
    opts: &LtiOptions,
) -> Result<BoundedAngle> {
    if p.order() == 0 {
        if let Ok(t) = ComplexMatrix::from_real(&p.ss.d).and_then(|d| hpd_singular_angle_oracle(&d))
        {
            return Ok(BoundedAngle::certified(t).linear(true));
        }
    }
    let h = hinf_impl(p, grid, opts, Mode::Upper)?;
    let bound = if h.angle.value() <= PI / 2.0 {
        PI / 2.0
    } else if p.is_siso() {
        h.angle.value()
    } else {
        PI
    };
    Ok(BoundedAngle::certified(AngleRadians::saturating(bound)).linear(true))
}

/// Secant gain of a stable LTI system on the grid:
/// `sup_w lambda_max(He(P)^-1 P* P)`, `inf` if `He(P(jw))` is not positive definite somewhere.
pub fn secant_gain(p: &LtiSystem, grid: &FrequencyGrid, opts: &LtiOptions) -> Result<f64> {
    p.require_stable(opts.stability_tol)?;
    let mut omegas = grid.finite();
    if grid.include_infinity {
        omegas.push(f64::INFINITY);
    }
    let gains: Vec<f64> = omegas
        .par_iter()
        .map(|&w| {
            let r = p.response_unchecked(w).into_matrix();
            if r.norm() <= opts.kernel_tol {
                return 0.0;
            }
            let he = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
            let gram = r.adjoint() * &r;
            let Some(chol) = nalgebra::Cholesky::new(he) else {
                return f64::INFINITY;
            };
            let Some(linv) = chol.l().try_inverse() else {
                return f64::INFINITY;
            };
            let m = &linv * gram * linv.adjoint();
            let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            m.symmetric_eigenvalues().max()
        })
        .collect();
    Ok(gains.into_iter().fold(0.0, f64::max))
}
