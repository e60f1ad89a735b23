mod common;

use angleguard::lti::freq_response;
use angleguard::nonlinear::{
    estimate_incremental_angle, estimate_singular_angle, evaluate, probe_library,
    sector_angle_bound, EstimatorOptions, PassivityIndices,
};
use angleguard::signal::{inner_product, l2_norm, truncate};
use angleguard::{LtiOptions, LtiSystem, ProbeConfig, ScalarFn, SectorBound, SystemOperator};
use common::{oracle_angle, rng};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn probes(dim: usize, seed: u64) -> angleguard::ProbeSet {
    let cfg = ProbeConfig {
        count: 10,
        support_steps: 200,
        tail_steps: 100,
        seed,
        ..Default::default()
    };
    probe_library(dim, &cfg).unwrap()
}

fn sector_fn() -> impl Strategy<Value = (ScalarFn, SectorBound)> {
    (-2.0f64..1.0, -2.0f64..2.0, 0usize..4, 0.0f64..1.0).prop_map(|(la, lr, kind, x)| {
        let a = 10f64.powf(la);
        let b = a * (1.0 + 10f64.powf(lr));
        let f = match kind {
            0 => ScalarFn::Gain { k: a + x * (b - a) },
            1 => ScalarFn::Saturation {
                a,
                b,
                level: 0.01 + 5.0 * x,
            },
            2 => ScalarFn::DeadzoneGain {
                a,
                b,
                width: 0.01 + 5.0 * x,
            },
            _ => ScalarFn::SectorModulated {
                a,
                b,
                freq: 0.5 + 10.0 * x,
                phase: x,
            },
        };
        (f, SectorBound::new(a, b).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sector_members_respect_the_angle_and_vsp_bounds((f, s) in sector_fn(), seed in 0u64..16) {
        let op = SystemOperator::static_map(f, Some(s), 1).unwrap();
        let set = probes(1, seed);
        let est = estimate_singular_angle(&op, &set, &EstimatorOptions::default()).unwrap();
        prop_assert!(est.angle.value() <= sector_angle_bound(s).value() + 1e-9);
        let idx = PassivityIndices::from_sector(s);
        for u in &set.signals {
            let y = evaluate(&op, u).unwrap();
            let lhs = inner_product(u, &y).unwrap();
            let rhs = idx.nu * l2_norm(u).powi(2) + idx.rho * l2_norm(&y).powi(2);
            prop_assert!(lhs >= rhs - 1e-9 * (lhs.abs() + rhs.abs()));
        }
    }

    #[test]
    fn scaling_leaves_estimates_unchanged((f, s) in sector_fn(), k in 1e-3f64..1e3) {
        let op = SystemOperator::static_map(f, Some(s), 1).unwrap();
        let scaled = SystemOperator::scaled(op.clone(), k).unwrap();
        let set = probes(1, 1);
        let opts = EstimatorOptions::default();
        prop_assert_eq!(
            estimate_singular_angle(&op, &set, &opts).unwrap(),
            estimate_singular_angle(&scaled, &set, &opts).unwrap()
        );
        let pairs = set.incremental_pairs();
        prop_assert_eq!(
            estimate_incremental_angle(&op, &pairs, None, &opts).unwrap().cos_value,
            estimate_incremental_angle(&scaled, &pairs, None, &opts).unwrap().cos_value
        );
    }

    #[test]
    fn outputs_are_causal((f, s) in sector_fn(), t in 0.1f64..2.5) {
        let lti = LtiSystem::from_transfer_function(&[1.0, 2.0], &[1.0, 3.0, 2.0]).unwrap();
        let op = SystemOperator::cascade(vec![
            SystemOperator::static_map(f, Some(s), 1).unwrap(),
            SystemOperator::lti(lti).unwrap(),
            SystemOperator::delay(3, 1).unwrap(),
        ]).unwrap();
        let u = &probes(1, 2).signals[3];
        let full = truncate(&evaluate(&op, u).unwrap(), t).unwrap();
        let cut = truncate(&evaluate(&op, &truncate(u, t).unwrap()).unwrap(), t).unwrap();
        prop_assert!(full.add_scaled(-1.0, &cut).unwrap().as_flat().iter().all(|v| v.abs() < 1e-9));
    }
}

fn random_mimo(m: usize, r: &mut impl Rng) -> LtiSystem {
    use nalgebra::DMatrix;
    let order = r.random_range(1..=3);
    let g = DMatrix::from_fn(order, order, |_, _| r.sample::<f64, _>(StandardNormal));
    let shift = g
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let a = g - DMatrix::identity(order, order) * (shift + 0.5);
    let b = DMatrix::from_fn(order, m, |_, _| r.sample::<f64, _>(StandardNormal));
    let c = DMatrix::from_fn(m, order, |_, _| r.sample::<f64, _>(StandardNormal));
    let d = DMatrix::from_fn(m, m, |_, _| r.sample::<f64, _>(StandardNormal));
    LtiSystem::from_state_space(a, b, c, d).unwrap()
}

#[test]
fn cascade_subadditivity_frequency_wise() {
    // For LTI stages the cascade response at each frequency is the matrix
    // product, so the matrix oracle checks the cascade bound directly.
    let mut r = rng(21);
    let opts = LtiOptions::default();
    for t in 0..40u64 {
        let m = r.random_range(1..=3);
        let (p1, p2) = (random_mimo(m, &mut r), random_mimo(m, &mut r));
        for (k, w) in [0.0, 0.3, 2.0, 15.0].into_iter().enumerate() {
            let a = freq_response(&p1, w, &opts).unwrap().into_matrix();
            let b = freq_response(&p2, w, &opts).unwrap().into_matrix();
            if a.norm() < 1e-9 || b.norm() < 1e-9 {
                continue;
            }
            let seed = 10 * t + 3 * k as u64;
            let ab = &b * &a;
            if ab.norm() < 1e-9 {
                continue;
            }
            assert!(
                oracle_angle(&ab, seed)
                    <= oracle_angle(&a, seed + 1) + oracle_angle(&b, seed + 2) + 1e-6
            );
        }
    }
}

#[test]
fn siso_lti_estimate_stays_below_the_hinf_angle() {
    // A sampled angle is a lower bound on the system angle, which equals the
    // H-infinity angle arcsin(1/3) for this lead. The slack covers the ZOH.
    let p = LtiSystem::from_transfer_function(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
    let op = SystemOperator::lti(p).unwrap();
    let est = estimate_singular_angle(&op, &probes(1, 5), &EstimatorOptions::default()).unwrap();
    assert!(
        est.angle.value() <= (1.0f64 / 3.0).asin() + 1e-2,
        "{}",
        est.angle.value()
    );
}
