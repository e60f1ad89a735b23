//! Singular angle of complex matrices.
//!
//! For a nonzero `A`, `cos theta(A) = inf Re(x* A x) / (|x| |A x|)` over
//! `x != 0` with `A x != 0`. The infimum is a nonconvex problem. This module
//! offers three views of it:
//!
//! * [`matrix_singular_angle`]: multi-start Riemannian descent on the unit
//!   sphere. The reported angle is the best found, i.e. a lower bound on
//!   `theta(A)`.
//! * [`certified_angle_upper`]: a certified over-approximation of `theta(A)`
//!   built from Hermitian semidefinite tests, used wherever a verdict must be
//!   sound.
//! * [`hpd_singular_angle_oracle`]: the closed form for Hermitian positive
//!   definite matrices.

pub(crate) mod certify;
pub(crate) mod eig;
mod search;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::AngleRadians;
use crate::certificate::{InputsDigest, Method, StabilityCertificate};
use crate::error::{AngleError, Result};

pub use certify::{certified_angle_upper, CertifiedAngle, CertifyRoute};
pub use search::{matrix_singular_angle, AngleResult};

/// Dense square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(AngleError::InvalidArgument(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.is_finite()) {
            return Err(AngleError::InvalidArgument(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(ComplexMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(AngleError::InvalidArgument(
                "rows must all have length n".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn diag(entries: &[Complex64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        self.0.clone().singular_values().max()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        ComplexMatrix(&self.0 * k)
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<Self> {
        same_size(self, other)?;
        Ok(ComplexMatrix(&self.0 * &other.0))
    }

    /// `det(I + self)`.
    pub fn det_identity_plus(&self) -> Complex64 {
        (DMatrix::identity(self.n(), self.n()) + &self.0).determinant()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.0 - self.0.adjoint()).norm() <= tol * self.0.norm().max(1.0)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eig::eigenvalues(&self.0)
    }

    /// Absolute threshold on `|A x|` below which a unit direction is treated
    /// as lying in the kernel.
    pub fn kernel_threshold(&self, rel: f64) -> f64 {
        rel * self.norm2()
    }
}

fn same_size(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(AngleError::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    Ok(())
}

/// Options for the nonconvex angle search and the certified bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the Riemannian gradient norm drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Directions with `|A x| < kernel_tol * ||A||_2` are excluded.
    pub kernel_tol: f64,
    /// Seeded random starting directions, on top of the structured ones.
    pub random_starts: usize,
    /// Number of best starting points that are refined by descent.
    pub descents: usize,
    /// Phase grid used for two-eigenvector mixtures.
    pub mixture_phases: usize,
    pub seed: u64,
    /// Intervals of the `t = |Ax|/|x|` grid used by the certified bound.
    pub certify_intervals: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iters: 3000,
            kernel_tol: 1e-10,
            random_starts: 48,
            descents: 12,
            mixture_phases: 8,
            seed: 42,
            certify_intervals: 512,
        }
    }
}

/// `cos theta(x, y) = Re(x* y) / (|x| |y|)`, zero angle if either is zero.
pub fn vector_angle(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<AngleRadians> {
    if x.len() != y.len() {
        return Err(AngleError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Ok(AngleRadians::ZERO);
    }
    Ok(AngleRadians::from_cos(x.dotc(y).re / (nx * ny)))
}

/// Closed-form singular angle of a Hermitian positive definite matrix:
/// `arccos(2 sqrt(l_min l_max) / (l_min + l_max))`.
pub fn hpd_singular_angle_oracle(a: &ComplexMatrix) -> Result<AngleRadians> {
    if !a.is_hermitian(1e-12) {
        return Err(AngleError::NotHermitianPositiveDefinite);
    }
    let herm = (a.as_matrix() + a.as_matrix().adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) {
        return Err(AngleError::NotHermitianPositiveDefinite);
    }
    Ok(AngleRadians::from_cos(2.0 * (lo * hi).sqrt() / (lo + hi)))
}

/// `|arg lambda_i(A)|` for every eigenvalue with `|lambda_i|` above the kernel
/// threshold; zero eigenvalues have no angle and are skipped.
pub fn eigen_angles(a: &ComplexMatrix, kernel_tol: f64) -> Result<Vec<AngleRadians>> {
    if a.is_zero() {
        return Err(AngleError::ZeroMatrix);
    }
    let thresh = a.kernel_threshold(kernel_tol);
    Ok(a.eigenvalues()?
        .into_iter()
        .filter(|l| l.norm() > thresh)
        .map(|l| AngleRadians::saturating(l.arg().abs()))
        .collect())
}

/// A point `x* A x / (|x| |A x|)` of the normalized numerical range.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRangeSample {
    pub point: Complex64,
    pub witness: DVector<Complex64>,
}

/// `x* A x / (|x| |A x|)` for a nonzero `x`, or `None` near the kernel.
pub fn normalized_range_point(
    a: &ComplexMatrix,
    x: &DVector<Complex64>,
    kernel_thresh: f64,
) -> Option<Complex64> {
    let nx = x.norm();
    if nx == 0.0 {
        return None;
    }
    let ax = a.as_matrix() * x;
    let nax = ax.norm();
    if nax <= kernel_thresh * nx {
        return None;
    }
    Some(x.dotc(&ax) / (nx * nax))
}

/// Deterministic sample of `W_N(A)`: eigenvectors, right singular vectors,
/// two-eigenvector mixtures on a phase/amplitude grid, then `count` seeded
/// random unit vectors.
pub fn normalized_numerical_range(
    a: &ComplexMatrix,
    count: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<NormalizedRangeSample>> {
    if a.is_zero() {
        return Err(AngleError::ZeroMatrix);
    }
    if count == 0 {
        return Err(AngleError::InvalidArgument(
            "count must be at least 1".into(),
        ));
    }
    let thresh = a.kernel_threshold(opts.kernel_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = search::structured_starts(a, opts.mixture_phases)?;
    candidates.extend((0..count).map(|_| search::random_unit(a.n(), &mut rng)));
    Ok(candidates
        .into_iter()
        .filter_map(|x| {
            let x = normalize_phase(&x)?;
            normalized_range_point(a, &x, thresh)
                .map(|point| NormalizedRangeSample { point, witness: x })
        })
        .collect())
}

/// Unit vector with its first non-negligible component made real positive.
pub(crate) fn normalize_phase(x: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    let n = x.norm();
    if !(n > 0.0) || !n.is_finite() {
        return None;
    }
    let mut y = x / Complex64::new(n, 0.0);
    if let Some(pivot) = y.iter().find(|z| z.norm() > 1e-8).copied() {
        let rot = pivot.conj() / pivot.norm();
        y *= rot;
    }
    Some(y)
}

/// Matrix small angle theorem: `det(I + BA) != 0` if `theta(A) + theta(B) < pi`.
///
/// The decision uses certified over-approximations of both angles, so a
/// `certified` verdict is sound. The search (lower-bound) angles and
/// `|det(I + BA)|` are recorded as witnesses.
pub fn matrix_small_angle_check(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    opts: &SolverOptions,
    margin: f64,
) -> Result<StabilityCertificate> {
    same_size(a, b)?;
    if a.is_zero() || b.is_zero() {
        return Err(AngleError::ZeroMatrix);
    }
    let ua = certified_angle_upper(a, opts)?;
    let ub = certified_angle_upper(b, opts)?;
    let sa = matrix_singular_angle(a, opts)?;
    let sb = matrix_singular_angle(b, opts)?;
    let det = b.mul(a)?.det_identity_plus().norm();
    let digest = InputsDigest::new("thm2")
        .f64s(
            a.as_matrix()
                .iter()
                .flat_map(|z| [z.re, z.im])
                .collect::<Vec<_>>()
                .iter(),
        )
        .f64s(
            b.as_matrix()
                .iter()
                .flat_map(|z| [z.re, z.im])
                .collect::<Vec<_>>()
                .iter(),
        )
        .f64(margin);
    Ok(StabilityCertificate::decide(
        Method::Thm2,
        PI - (ua.angle.value() + ub.angle.value()),
        margin,
    )
    .with_witness("theta_a_upper", ua.angle.value())
    .with_witness("theta_b_upper", ub.angle.value())
    .with_witness("theta_a_search", sa.angle.value())
    .with_witness("theta_b_search", sb.angle.value())
    .with_witness("abs_det_i_plus_ba", det)
    .with_seed(opts.seed)
    .with_digest(digest))
}
