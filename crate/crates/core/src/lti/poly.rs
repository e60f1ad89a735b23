//! Real polynomials in descending-degree coefficient form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{AngleError, Result};

pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    let first = coeffs
        .iter()
        .position(|c| *c != 0.0)
        .unwrap_or(coeffs.len());
    coeffs[first..].to_vec()
}

pub fn degree(coeffs: &[f64]) -> Option<usize> {
    let t = trim(coeffs);
    (!t.is_empty()).then(|| t.len() - 1)
}

pub fn eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots from the eigenvalues of the companion matrix.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs);
    if c.is_empty() {
        return Err(AngleError::InvalidArgument(
            "zero polynomial has no roots".into(),
        ));
    }
    let m = c.len() - 1;
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        comp[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    Ok(comp.complex_eigenvalues().iter().copied().collect())
}
