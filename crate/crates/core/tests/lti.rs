mod common;

use std::f64::consts::PI;

use angleguard::lti::{
    closed_loop, frequencywise_angle, hinf_singular_angle, hinf_small_angle_check,
    lti_small_angle_check, poly, system_angle_upper, two_tone_bound, well_posedness_check,
};
use angleguard::{FrequencyGrid, LtiOptions, LtiSystem};
use common::{mixed_matrix, oracle_angle, rng};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_siso(r: &mut impl Rng) -> LtiSystem {
    let mut den = vec![1.0];
    let order = r.random_range(1..=3);
    let mut k = 0;
    while k < order {
        if order - k >= 2 && r.random_bool(0.5) {
            let (re, im): (f64, f64) = (r.random_range(0.1..3.0), r.random_range(0.1..10.0));
            den = poly::mul(&den, &[1.0, 2.0 * re, re * re + im * im]);
            k += 2;
        } else {
            den = poly::mul(&den, &[1.0, r.random_range(0.1..5.0)]);
            k += 1;
        }
    }
    let num_deg = r.random_range(0..=order);
    let num: Vec<f64> = (0..=num_deg)
        .map(|_| r.sample::<f64, _>(StandardNormal))
        .collect();
    LtiSystem::from_transfer_function(&num, &den).unwrap()
}

fn random_mimo(r: &mut impl Rng) -> LtiSystem {
    let m = r.random_range(1..=3);
    let order = r.random_range(1..=3);
    let g = DMatrix::from_fn(order, order, |_, _| r.sample::<f64, _>(StandardNormal));
    let shift = g
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let a = g - DMatrix::identity(order, order) * (shift + r.random_range(0.1..2.0));
    let b = DMatrix::from_fn(order, m, |_, _| r.sample::<f64, _>(StandardNormal));
    let c = DMatrix::from_fn(m, order, |_, _| r.sample::<f64, _>(StandardNormal));
    let d = DMatrix::from_fn(m, m, |_, _| r.sample::<f64, _>(StandardNormal))
        + DMatrix::identity(m, m) * 2.0;
    LtiSystem::from_state_space(a, b, c, d).unwrap()
}

fn separation_example() -> LtiSystem {
    LtiSystem::from_transfer_function(
        &poly::mul(&[1.0, 5.0], &[1.0, 3.0, 102.3]),
        &poly::mul(&[1.0, 1.0], &[1.0, 6.0, 109.0]),
    )
    .unwrap()
}

#[test]
fn chain_holds_on_random_systems() {
    let mut r = rng(3);
    let opts = LtiOptions::default();
    let grid = FrequencyGrid::log_spaced(1e-2, 1e3, 80).unwrap();
    for _ in 0..30 {
        let p = if r.random_bool(0.5) {
            random_siso(&mut r)
        } else {
            random_mimo(&mut r)
        };
        let h = hinf_singular_angle(&p, &grid, &opts).unwrap().angle.value();
        for w in grid.finite() {
            assert!(frequencywise_angle(&p, w, &opts).unwrap().value() <= h + 1e-9);
        }
    }
}

#[test]
fn conjugate_frequencies_share_an_angle() {
    let mut r = rng(4);
    let opts = LtiOptions::default();
    for _ in 0..20 {
        let p = random_mimo(&mut r);
        for w in [0.05, 0.7, 3.0, 40.0] {
            let plus = frequencywise_angle(&p, w, &opts).unwrap().value();
            let minus = frequencywise_angle(&p, -w, &opts).unwrap().value();
            assert!((plus - minus).abs() < 1e-9, "{plus} vs {minus}");
        }
    }
}

#[test]
fn two_tone_endpoints_are_single_tones() {
    let mut r = rng(6);
    let opts = LtiOptions::default();
    for _ in 0..30 {
        let p = random_siso(&mut r);
        let (w0, w1) = (r.random_range(0.1..5.0), r.random_range(5.0..50.0));
        let single = frequencywise_angle(&p, w0, &opts).unwrap().value();
        let full = two_tone_bound(&p, w0, w1, 1.0 - 1e-12, &opts).unwrap();
        assert!((full.clamp(-1.0, 1.0).acos() - single).abs() < 1e-6);
    }
}

#[test]
fn two_tone_angles_stay_below_the_system_angle_bound() {
    let mut r = rng(7);
    let opts = LtiOptions::default();
    let grid = FrequencyGrid::default();
    for _ in 0..30 {
        let p = random_siso(&mut r);
        let upper = system_angle_upper(&p, &grid, &opts).unwrap().value();
        for _ in 0..10 {
            let (w0, w1, tau) = (
                r.random_range(0.01..5.0),
                r.random_range(0.5..100.0),
                r.random_range(0.0..1.0),
            );
            let cos = two_tone_bound(&p, w0, w1, tau, &opts).unwrap();
            assert!(cos.clamp(-1.0, 1.0).acos() <= upper + 1e-6);
        }
    }
}

#[test]
fn two_tone_separates_the_system_angle_from_hinf() {
    let p = separation_example();
    let opts = LtiOptions::default();
    let h = hinf_singular_angle(&p, &FrequencyGrid::default(), &opts).unwrap();
    let tt = two_tone_bound(&p, 2.613, 10.0, 0.4, &opts).unwrap();
    assert!(tt.acos() > h.angle.value());
    assert!((tt - 0.6694).abs() < 5e-3);
}

#[test]
fn frequency_certificates_imply_closed_loop_stability() {
    let mut r = rng(9);
    let opts = LtiOptions::default();
    let grid = FrequencyGrid::log_spaced(1e-3, 1e4, 200).unwrap();
    let (mut thm3, mut cor3) = (0, 0);
    for _ in 0..150 {
        let p = random_siso(&mut r);
        // First-order lags keep a useful share of the loops certifiable.
        let c = LtiSystem::from_transfer_function(
            &[r.random_range(0.1..5.0)],
            &[r.random_range(0.1..5.0), 1.0],
        )
        .unwrap();
        if !well_posedness_check(&p, &c).unwrap() {
            continue;
        }
        let t = lti_small_angle_check(&p, &c, &grid, &opts).unwrap();
        let h = hinf_small_angle_check(&p, &c, &grid, &opts).unwrap();
        if h.is_certified() {
            cor3 += 1;
            assert!(
                t.is_certified(),
                "H-infinity certificate without a frequency-wise one"
            );
        }
        if t.is_certified() {
            thm3 += 1;
            let g = closed_loop(&p, &c).unwrap();
            assert!(
                g.max_pole_real() < 0.0,
                "certified loop has a pole at {}",
                g.max_pole_real()
            );
        }
    }
    assert!(thm3 > 10 && cor3 > 0, "thm3={thm3} cor3={cor3}");
}

#[test]
fn closure_inside_a_right_angle_matrix_analog() {
    let mut r = rng(12);
    let mut tested = 0;
    for t in 0..3000u64 {
        if tested == 150 {
            break;
        }
        let n = r.random_range(1..=3);
        let a = mixed_matrix(n, &mut r);
        let b = mixed_matrix(n, &mut r);
        let ta = oracle_angle(&a, 3 * t);
        let tb = oracle_angle(&b, 3 * t + 1);
        let alpha = ta.max(tb);
        if alpha >= PI / 2.0 {
            continue;
        }
        tested += 1;
        let g = &a * (DMatrix::identity(n, n) + &b * &a).try_inverse().unwrap();
        assert!(oracle_angle(&g, 3 * t + 2) <= alpha + 1e-4);
    }
    assert_eq!(tested, 150);
}
