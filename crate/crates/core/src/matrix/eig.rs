//! Eigenpairs of a general complex matrix from its Schur form.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{AngleError, Result};

pub(crate) struct Eigenpair {
    #[allow(dead_code)] // read by the residual tests
    pub value: Complex64,
    pub vector: DVector<Complex64>,
}

pub(crate) fn eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

fn schur(a: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .map(Schur::unpack)
        .ok_or_else(|| AngleError::Numerical("Schur decomposition did not converge".into()))
}

/// Unit eigenvectors by back substitution on the triangular Schur factor.
/// Defective or clustered eigenvalues get a perturbed pivot, which yields a
/// vector in the corresponding invariant subspace.
pub(crate) fn eigenpairs(a: &DMatrix<Complex64>) -> Result<Vec<Eigenpair>> {
    let (q, t) = schur(a)?;
    let n = t.nrows();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut y = DVector::<Complex64>::zeros(n);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j + 1..=i {
                acc += t[(j, k)] * y[k];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < floor {
                pivot = Complex64::new(floor, 0.0);
            }
            y[j] = -acc / pivot;
        }
        let mut x = &q * y;
        let norm = x.norm();
        if norm > 0.0 && norm.is_finite() {
            x /= Complex64::new(norm, 0.0);
            out.push(Eigenpair {
                value: lambda,
                vector: x,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenpairs_satisfy_definition() {
        let c = |re, im| Complex64::new(re, im);
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.5),
                c(2.0, -1.0),
                c(0.0, 0.3),
                c(-0.4, 0.0),
                c(0.7, 0.7),
                c(1.1, 0.0),
                c(0.2, -0.2),
                c(0.0, 1.0),
                c(-1.3, 0.1),
            ],
        );
        for p in eigenpairs(&a).unwrap() {
            let r = &a * &p.vector - &p.vector * p.value;
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
            assert!((p.vector.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_block_gives_a_vector() {
        let c = |re| Complex64::new(re, 0.0);
        let a = DMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(2.0)]);
        let pairs = eigenpairs(&a).unwrap();
        assert_eq!(pairs.len(), 2);
        for p in pairs {
            assert!((p.value - c(2.0)).norm() < 1e-12);
            assert!(p.vector.iter().all(|z| z.is_finite()));
        }
    }
}
