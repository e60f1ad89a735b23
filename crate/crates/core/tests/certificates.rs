mod common;

use std::f64::consts::PI;

use angleguard::certificate::{cyclic_small_angle, feedback_angle_closure, nonlinear_small_angle};
use angleguard::{AngleRadians, BoundedAngle, RuleOptions, Verdict};
use common::{mixed_matrix, oracle_angle, rng};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn bound(x: f64) -> BoundedAngle {
    BoundedAngle::certified(AngleRadians::new(x).unwrap())
}

proptest! {
    #[test]
    fn shrinking_an_angle_never_loses_a_certificate(
        p in 0.0f64..PI, c in 0.0f64..PI, shrink in 0.0f64..1.0, margin in 0.0f64..0.5,
    ) {
        let opts = RuleOptions { margin, ..Default::default() };
        let before = nonlinear_small_angle(bound(p), bound(c), opts).unwrap();
        let after = nonlinear_small_angle(bound(p * shrink), bound(c), opts).unwrap();
        if before.is_certified() {
            prop_assert!(after.is_certified());
        }
    }

    #[test]
    fn cyclic_rule_is_monotone(angles in prop::collection::vec(0.0f64..1.5, 1..6), k in 0usize..6, shrink in 0.0f64..1.0) {
        let opts = RuleOptions::default();
        let before = cyclic_small_angle(&angles.iter().map(|&a| bound(a)).collect::<Vec<_>>(), opts).unwrap();
        let mut smaller = angles.clone();
        let k = k % smaller.len();
        smaller[k] *= shrink;
        let after = cyclic_small_angle(&smaller.iter().map(|&a| bound(a)).collect::<Vec<_>>(), opts).unwrap();
        if before.is_certified() {
            prop_assert!(after.is_certified());
        }
    }

    #[test]
    fn closure_is_the_larger_angle(p in 0.0f64..PI, c in 0.0f64..PI) {
        match feedback_angle_closure(bound(p), bound(c)).unwrap() {
            Some(g) => {
                prop_assert!(p + c <= PI);
                prop_assert_eq!(g.value(), p.max(c));
            }
            None => prop_assert!(p + c > PI),
        }
    }
}

#[test]
fn sampled_angles_are_refused() {
    let lower = BoundedAngle::sampled(AngleRadians::new(0.1).unwrap());
    assert!(nonlinear_small_angle(lower, bound(0.1), RuleOptions::default()).is_err());
}

#[test]
fn boundary_sum_is_inconclusive() {
    let cert =
        nonlinear_small_angle(bound(PI / 2.0), bound(PI / 2.0), RuleOptions::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Inconclusive);
}

#[test]
fn matrix_instances_of_the_nonlinear_rule_are_sound() {
    let mut r = rng(17);
    let mut certified = 0;
    for t in 0..400u64 {
        let n = r.random_range(1..=3);
        let a = mixed_matrix(n, &mut r);
        let b = mixed_matrix(n, &mut r);
        // Oracle angles are lower bounds; a small pad stands in for a certified bound.
        let ta = (oracle_angle(&a, 2 * t) + 1e-6).min(PI);
        let tb = (oracle_angle(&b, 2 * t + 1) + 1e-6).min(PI);
        let cert = nonlinear_small_angle(bound(ta), bound(tb), RuleOptions::default()).unwrap();
        if cert.is_certified() {
            certified += 1;
            assert!((DMatrix::identity(n, n) + &b * &a).determinant().norm() > 1e-12);
        }
    }
    assert!(certified > 50, "only {certified} certified instances");
}
