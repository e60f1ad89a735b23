//! Multi-start Riemannian descent for `inf Re(x* A x) / |A x|` on the unit
//! sphere of `C^n`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{eig, normalize_phase, ComplexMatrix, SolverOptions};
use crate::angle::AngleRadians;
use crate::error::{AngleError, Result};

/// Outcome of the nonconvex angle search.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleResult {
    /// Best angle found; a lower bound on `theta(A)`.
    pub angle: AngleRadians,
    /// Unit vector attaining `cos_value`, first significant entry real positive.
    pub witness: DVector<Complex64>,
    pub cos_value: f64,
    /// Every refined start reached the gradient tolerance.
    pub converged: bool,
    pub seed: u64,
}

struct Objective<'a> {
    a: &'a DMatrix<Complex64>,
    herm: DMatrix<Complex64>,
    kernel: f64,
}

impl<'a> Objective<'a> {
    fn new(a: &'a ComplexMatrix, kernel_tol: f64) -> Self {
        let m = a.as_matrix();
        Objective {
            a: m,
            herm: (m + m.adjoint()) * Complex64::new(0.5, 0.0),
            kernel: a.kernel_threshold(kernel_tol),
        }
    }

    /// Ratio at a unit vector, `None` inside the kernel band.
    fn value(&self, x: &DVector<Complex64>) -> Option<f64> {
        let ax = self.a * x;
        let nax = ax.norm();
        (nax > self.kernel).then(|| x.dotc(&ax).re / nax)
    }

    /// Ratio and its Riemannian gradient at a unit vector.
    fn value_grad(&self, x: &DVector<Complex64>) -> Option<(f64, DVector<Complex64>)> {
        let ax = self.a * x;
        let nax = ax.norm();
        if nax <= self.kernel {
            return None;
        }
        let f = x.dotc(&ax).re / nax;
        let hx = &self.herm * x;
        let aax = self.a.ad_mul(&ax);
        let scale = |k: f64| Complex64::new(k, 0.0);
        let g = hx * scale(2.0 / nax) - (x + aax * scale(1.0 / (nax * nax))) * scale(f);
        let radial = x.dotc(&g).re;
        Some((f, g - x * scale(radial)))
    }
}

pub(crate) fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Eigenvectors, right singular vectors, the lowest eigenvector of the
/// Hermitian part, and pairwise eigenvector mixtures on a phase grid.
pub(crate) fn structured_starts(
    a: &ComplexMatrix,
    phases: usize,
) -> Result<Vec<DVector<Complex64>>> {
    let m = a.as_matrix();
    let mut out = Vec::new();
    let eigvecs: Vec<DVector<Complex64>> =
        eig::eigenpairs(m)?.into_iter().map(|p| p.vector).collect();
    out.extend(eigvecs.iter().cloned());

    let svd = m.clone().svd(false, true);
    if let Some(vt) = svd.v_t {
        for i in 0..vt.nrows() {
            out.push(vt.row(i).adjoint());
        }
    }

    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let sym = herm.symmetric_eigen();
    let imin = sym.eigenvalues.imin();
    out.push(sym.eigenvectors.column(imin).into_owned());

    let phases = phases.max(1);
    for i in 0..eigvecs.len() {
        for j in i + 1..eigvecs.len() {
            for p in 0..phases {
                let phi = 2.0 * std::f64::consts::PI * p as f64 / phases as f64;
                let rot = Complex64::from_polar(1.0, phi);
                for w in [0.25f64, 0.5, 0.75] {
                    let (cw, sw) = (w.sqrt(), (1.0 - w).sqrt());
                    out.push(&eigvecs[i] * Complex64::new(cw, 0.0) + &eigvecs[j] * (rot * sw));
                }
            }
        }
    }
    Ok(out
        .into_iter()
        .filter_map(|x| normalize_phase(&x))
        .collect())
}

const STAGNATION_ITERS: usize = 25;
const STALL_GRAD_TOL: f64 = 1e-6;

struct Descent {
    f: f64,
    x: DVector<Complex64>,
    converged: bool,
}

/// Gradient descent with Barzilai-Borwein step guesses, Armijo backtracking
/// and normalization as the retraction.
fn descend(obj: &Objective<'_>, x0: DVector<Complex64>, opts: &SolverOptions) -> Option<Descent> {
    let (mut f, mut g) = obj.value_grad(&x0)?;
    let mut x = x0;
    let mut step = 1.0;
    let mut prev: Option<(DVector<Complex64>, DVector<Complex64>)> = None;
    let mut flat = 0usize;
    for _ in 0..opts.max_iters {
        let gnorm = g.norm();
        if gnorm < opts.tol {
            return Some(Descent {
                f,
                x,
                converged: true,
            });
        }
        // Near the optimum f stops changing long before the gradient
        // reaches a tight tolerance.
        if flat >= STAGNATION_ITERS {
            return Some(Descent {
                f,
                x,
                converged: gnorm < STALL_GRAD_TOL,
            });
        }
        if let Some((px, pg)) = &prev {
            let s = &x - px;
            let y = &g - pg;
            let sy = s.dotc(&y).re;
            if sy > 0.0 {
                step = (s.norm_squared() / sy).clamp(1e-8, 1e4);
            }
        }
        let mut accepted = None;
        let mut alpha = step;
        for _ in 0..60 {
            let trial = &x - &g * Complex64::new(alpha, 0.0);
            let tn = trial.norm();
            let trial = trial / Complex64::new(tn, 0.0);
            if let Some(ft) = obj.value(&trial) {
                if ft <= f - 1e-4 * alpha * gnorm * gnorm {
                    accepted = Some((trial, alpha));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, alpha)) = accepted else {
            // No decrease representable in floating point any more.
            return Some(Descent {
                f,
                x,
                converged: gnorm < STALL_GRAD_TOL,
            });
        };
        let (fn_, gn) = obj.value_grad(&xn)?;
        if f - fn_ <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
            flat += 1;
        } else {
            flat = 0;
        }
        prev = Some((std::mem::replace(&mut x, xn), std::mem::replace(&mut g, gn)));
        f = fn_;
        step = alpha;
    }
    let converged = g.norm() < opts.tol;
    Some(Descent { f, x, converged })
}

fn lexicographic(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Best-found singular angle of `A` (a lower bound on `theta(A)`).
///
/// Candidate directions are the structured starts plus `opts.random_starts`
/// seeded random unit vectors; the `opts.descents` best candidates are
/// refined by Riemannian descent.
pub fn matrix_singular_angle(a: &ComplexMatrix, opts: &SolverOptions) -> Result<AngleResult> {
    if a.is_zero() {
        return Err(AngleError::ZeroMatrix);
    }
    let obj = Objective::new(a, opts.kernel_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = structured_starts(a, opts.mixture_phases)?;
    starts.extend((0..opts.random_starts).map(|_| random_unit(a.n(), &mut rng)));

    let mut scored: Vec<(f64, DVector<Complex64>)> = starts
        .into_iter()
        .filter_map(|x| obj.value(&x).map(|f| (f, x)))
        .collect();
    if scored.is_empty() {
        return Err(AngleError::Numerical(
            "every starting direction lies in the kernel band".into(),
        ));
    }
    scored.sort_by(|l, r| l.0.total_cmp(&r.0));
    scored.truncate(opts.descents.max(1));

    let mut results: Vec<Descent> = scored
        .into_iter()
        .filter_map(|(_, x)| descend(&obj, x, opts))
        .collect();
    if results.is_empty() {
        return Err(AngleError::Numerical(
            "descent failed from every start".into(),
        ));
    }
    let converged = results.iter().all(|d| d.converged);
    let best = results.iter().map(|d| d.f).fold(f64::INFINITY, f64::min);
    results.retain(|d| d.f <= best + 1e-12);
    let witness = results
        .into_iter()
        .filter_map(|d| normalize_phase(&d.x))
        .min_by(lexicographic)
        .ok_or_else(|| AngleError::Numerical("degenerate witness".into()))?;
    let cos_value = best.clamp(-1.0, 1.0);
    Ok(AngleResult {
        angle: AngleRadians::from_cos(cos_value),
        witness,
        cos_value,
        converged,
        seed: opts.seed,
    })
}
