//! Test-only helpers: a brute-force matrix angle oracle and random generators.
//!
//! The oracle deliberately shares no code with the library solver: it samples
//! random unit vectors and polishes the best few with Nelder-Mead.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| gaussian_c(rng))
}

/// `e^{j phi} (c I + s G)`: a mix that spans small and large angles.
pub fn mixed_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let c: f64 = rng.random_range(0.0..2.0);
    let s: f64 = rng.random_range(0.05..1.0);
    let phi: f64 = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(-1.2..1.2)
    };
    let rot = Complex64::from_polar(1.0, phi);
    let g = gaussian_matrix(n, rng);
    (DMatrix::identity(n, n) * Complex64::new(c, 0.0) + g * Complex64::new(s, 0.0)) * rot
}

/// Row-major copy of a small matrix for allocation-free evaluation.
struct Dense {
    n: usize,
    m: Vec<Complex64>,
    thresh: f64,
}

impl Dense {
    fn new(a: &DMatrix<Complex64>) -> Self {
        let n = a.nrows();
        let m = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        Dense {
            n,
            m,
            thresh: 1e-10 * a.norm(),
        }
    }

    fn objective(&self, p: &[f64]) -> f64 {
        let n = self.n;
        let (mut re, mut nx2, mut nax2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.m[i * n + j] * Complex64::new(p[2 * j], p[2 * j + 1]);
            }
            let xi = Complex64::new(p[2 * i], p[2 * i + 1]);
            re += (xi.conj() * acc).re;
            nx2 += xi.norm_sqr();
            nax2 += acc.norm_sqr();
        }
        let (nx, nax) = (nx2.sqrt(), nax2.sqrt());
        if nx == 0.0 || nax <= self.thresh * nx {
            return 2.0;
        }
        (re / (nx * nax)).clamp(-1.0, 1.0)
    }
}

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    iters: usize,
) -> (f64, Vec<f64>) {
    let d = start.len();
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let (mut centroid, mut xr, mut xe) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let along = |out: &mut Vec<f64>, c: &[f64], worst: &[f64], t: f64| {
        for k in 0..d {
            out[k] = c[k] + t * (worst[k] - c[k]);
        }
    };
    for _ in 0..iters {
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let (best, worst, second) = (order[0], order[d], order[d - 1]);
        if vals[worst] - vals[best] < 1e-15 {
            break;
        }
        centroid.iter_mut().for_each(|v| *v = 0.0);
        for &i in &order[..d] {
            for k in 0..d {
                centroid[k] += pts[i][k] / d as f64;
            }
        }
        along(&mut xr, &centroid, &pts[worst], -1.0);
        let fr = f(&xr);
        if fr < vals[best] {
            along(&mut xe, &centroid, &pts[worst], -2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[worst].copy_from_slice(&xe);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&xr);
                vals[worst] = fr;
            }
        } else if fr < vals[second] {
            pts[worst].copy_from_slice(&xr);
            vals[worst] = fr;
        } else {
            let t = if fr < vals[worst] { -0.5 } else { 0.5 };
            along(&mut xe, &centroid, &pts[worst], t);
            let fc = f(&xe);
            if fc < vals[worst].min(fr) {
                pts[worst].copy_from_slice(&xe);
                vals[worst] = fc;
            } else {
                let anchor = pts[best].clone();
                for i in 0..=d {
                    if i != best {
                        for k in 0..d {
                            pts[i][k] = anchor[k] + 0.5 * (pts[i][k] - anchor[k]);
                        }
                        vals[i] = f(&pts[i]);
                    }
                }
            }
        }
    }
    let best = (0..=d)
        .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .unwrap();
    (vals[best], pts[best].clone())
}

/// Eigenvectors by one step of shifted inverse iteration on nalgebra's Schur
/// eigenvalues. Random sampling alone misses the narrow basins that sit near
/// eigen-directions when the angle is close to `pi`.
fn eigen_starts(a: &DMatrix<Complex64>) -> Vec<Vec<f64>> {
    let n = a.nrows();
    let Some(eigs) = a.clone().schur().eigenvalues() else {
        return Vec::new();
    };
    let scale = a.norm().max(1e-300);
    eigs.iter()
        .filter_map(|&lam| {
            let shift = lam + Complex64::new(1e-10 * scale, 1e-10 * scale);
            let m = a - DMatrix::identity(n, n) * shift;
            let rhs = nalgebra::DVector::from_fn(n, |i, _| {
                Complex64::new(1.0 + i as f64 * 0.37, 0.5 - i as f64 * 0.21)
            });
            let x = m.lu().solve(&rhs)?;
            let x = &x / Complex64::new(x.norm(), 0.0);
            let p: Vec<f64> = x.iter().flat_map(|z| [z.re, z.im]).collect();
            p.iter().all(|v| v.is_finite()).then_some(p)
        })
        .collect()
}

/// Brute-force `theta(A)`: the smallest normalized-range real part found by
/// `samples` random unit vectors, the best `polish` of them plus the
/// eigenvectors refined by restarted Nelder-Mead. A lower bound on the true
/// angle, tight in practice.
pub fn oracle_angle_with(a: &DMatrix<Complex64>, samples: usize, polish: usize, seed: u64) -> f64 {
    oracle_angle_tuned(a, samples, polish, 4, seed)
}

/// `oracle_angle_with` with an explicit number of Nelder-Mead restarts.
pub fn oracle_angle_tuned(
    a: &DMatrix<Complex64>,
    samples: usize,
    polish: usize,
    rounds: usize,
    seed: u64,
) -> f64 {
    let n = a.nrows();
    let mut r = rng(seed);
    let dense = Dense::new(a);
    let f = |p: &[f64]| dense.objective(p);
    let mut pool: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let p: Vec<f64> = (0..2 * n).map(|_| r.sample(StandardNormal)).collect();
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let p: Vec<f64> = p.iter().map(|v| v / norm).collect();
            (f(&p), p)
        })
        .collect();
    pool.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = pool[0].0;
    let starts: Vec<Vec<f64>> = pool
        .iter()
        .take(polish)
        .map(|(_, p)| p.clone())
        .chain(eigen_starts(a))
        .collect();
    for start in starts {
        best = best.min(f(&start));
        let mut p = start;
        let mut step = 0.2;
        for _ in 0..rounds {
            let (v, q) = nelder_mead(&f, &p, step, 1500);
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            p = q.iter().map(|v| v / norm).collect();
            best = best.min(v);
            step *= 0.1;
        }
    }
    best.clamp(-1.0, 1.0).acos()
}

pub fn oracle_angle(a: &DMatrix<Complex64>, seed: u64) -> f64 {
    oracle_angle_with(a, 1500, 3, seed)
}

/// Cheaper profile, accurate to well under `1e-3`.
pub fn coarse_oracle_angle(a: &DMatrix<Complex64>, seed: u64) -> f64 {
    oracle_angle_tuned(a, 600, 2, 2, seed)
}

pub fn random_signal(
    len: usize,
    dim: usize,
    h: f64,
    rng: &mut impl Rng,
) -> angleguard::DiscreteSignal {
    let data: Vec<f64> = (0..len * dim).map(|_| rng.sample(StandardNormal)).collect();
    angleguard::DiscreteSignal::from_flat(data, dim, h).unwrap()
}
