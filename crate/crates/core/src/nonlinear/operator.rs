//! Causal operators on sampled signals and their step-by-step evaluation.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::scalar::ScalarFn;
use crate::error::{AngleError, Result};
use crate::lti::{DiscreteStateSpace, Discretization, LtiSystem, SectorBound};
use crate::signal::DiscreteSignal;

/// Per-step loop solve for feedback interconnections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackOptions {
    pub relaxation: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        FeedbackOptions {
            relaxation: 0.5,
            tol: 1e-10,
            max_iters: 1000,
        }
    }
}

/// A causal operator mapping `0` to `0`.
#[derive(Debug, Clone)]
pub enum SystemOperator {
    /// `f` applied to every component of every sample.
    Static {
        f: ScalarFn,
        sector: Option<SectorBound>,
        dim: usize,
    },
    /// An LTI system, discretized at the signal's sample period.
    Lti {
        system: LtiSystem,
        method: Discretization,
    },
    /// `stages[0]` acts first.
    Cascade(Vec<SystemOperator>),
    /// Closed-loop map `e1 -> y1` of `u1 = e1 - C y1`, `y1 = P u1`.
    Feedback {
        plant: Box<SystemOperator>,
        controller: Box<SystemOperator>,
        opts: FeedbackOptions,
    },
    /// `k P` with `k > 0`.
    Scaled { base: Box<SystemOperator>, k: f64 },
    /// Pure delay by a whole number of samples.
    Delay { steps: usize, dim: usize },
}

impl SystemOperator {
    /// Static nonlinearity; a declared sector is checked against `f`.
    pub fn static_map(f: ScalarFn, sector: Option<SectorBound>, dim: usize) -> Result<Self> {
        f.validate()?;
        if dim == 0 {
            return Err(AngleError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        if f.eval(0.0) != 0.0 {
            return Err(AngleError::InvalidArgument(
                "static map must satisfy f(0) = 0".into(),
            ));
        }
        if let Some(s) = sector {
            f.check_sector(s)?;
        }
        Ok(SystemOperator::Static { f, sector, dim })
    }

    pub fn identity(dim: usize) -> Self {
        SystemOperator::Static {
            f: ScalarFn::Gain { k: 1.0 },
            sector: None,
            dim,
        }
    }

    pub fn lti(system: LtiSystem) -> Result<Self> {
        system.require_stable(1e-9)?;
        Ok(SystemOperator::Lti {
            system,
            method: Discretization::ZeroOrderHold,
        })
    }

    pub fn cascade(stages: Vec<SystemOperator>) -> Result<Self> {
        let first = stages.first().ok_or(AngleError::Empty("cascade"))?.dim();
        if let Some(bad) = stages.iter().find(|s| s.dim() != first) {
            return Err(AngleError::DimensionMismatch {
                expected: first,
                got: bad.dim(),
            });
        }
        Ok(SystemOperator::Cascade(stages))
    }

    pub fn feedback(
        plant: SystemOperator,
        controller: SystemOperator,
        opts: FeedbackOptions,
    ) -> Result<Self> {
        if plant.dim() != controller.dim() {
            return Err(AngleError::DimensionMismatch {
                expected: plant.dim(),
                got: controller.dim(),
            });
        }
        if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0)
            || !(opts.tol > 0.0)
            || opts.max_iters == 0
        {
            return Err(AngleError::InvalidArgument(format!(
                "bad feedback options {opts:?}"
            )));
        }
        Ok(SystemOperator::Feedback {
            plant: Box::new(plant),
            controller: Box::new(controller),
            opts,
        })
    }

    pub fn scaled(base: SystemOperator, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(AngleError::InvalidArgument(format!(
                "scale must be > 0, got {k}"
            )));
        }
        Ok(SystemOperator::Scaled {
            base: Box::new(base),
            k,
        })
    }

    pub fn delay(steps: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(AngleError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        Ok(SystemOperator::Delay { steps, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemOperator::Static { dim, .. } | SystemOperator::Delay { dim, .. } => *dim,
            SystemOperator::Lti { system, .. } => system.dim(),
            SystemOperator::Cascade(stages) => stages[0].dim(),
            SystemOperator::Feedback { plant, .. } => plant.dim(),
            SystemOperator::Scaled { base, .. } => base.dim(),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            SystemOperator::Static { f, .. } => matches!(f, ScalarFn::Gain { .. }),
            SystemOperator::Lti { .. } | SystemOperator::Delay { .. } => true,
            SystemOperator::Cascade(stages) => stages.iter().all(SystemOperator::is_linear),
            SystemOperator::Feedback {
                plant, controller, ..
            } => plant.is_linear() && controller.is_linear(),
            SystemOperator::Scaled { base, .. } => base.is_linear(),
        }
    }

    /// Drops outer positive scalings, which leave every angle unchanged.
    pub(crate) fn angle_core(&self) -> &SystemOperator {
        match self {
            SystemOperator::Scaled { base, .. } => base.angle_core(),
            other => other,
        }
    }
}

/// Runs `op` from rest over `u`, one output sample per input sample.
pub fn evaluate(op: &SystemOperator, u: &DiscreteSignal) -> Result<DiscreteSignal> {
    if u.dim() != op.dim() {
        return Err(AngleError::DimensionMismatch {
            expected: op.dim(),
            got: u.dim(),
        });
    }
    let h = u.sample_period();
    let mut out = Vec::with_capacity(u.as_flat().len());
    match op {
        // fast paths for the memoryless and purely linear cases
        SystemOperator::Static { f, .. } => out.extend(u.as_flat().iter().map(|&x| f.eval(x))),
        SystemOperator::Lti { system, method } => {
            out = system.discretize(h, *method)?.simulate(u.as_flat())
        }
        _ => {
            let mut st = Stepper::new(op, h)?;
            for k in 0..u.len() {
                let x = DVector::from_column_slice(u.sample(k));
                let y = st.output(&x, k)?;
                st.advance(&x, k)?;
                out.extend(y.iter());
            }
        }
    }
    DiscreteSignal::from_flat(out, u.dim(), h)
}

/// Stateful evaluator. `output` reads the current output for input `u`
/// without changing state; `advance` commits the step.
enum Stepper<'a> {
    Static(&'a ScalarFn),
    Lti {
        d: DiscreteStateSpace,
        x: DVector<f64>,
    },
    Cascade(Vec<Stepper<'a>>),
    Feedback {
        plant: Box<Stepper<'a>>,
        controller: Box<Stepper<'a>>,
        opts: FeedbackOptions,
        warm: DVector<f64>,
    },
    Scaled(Box<Stepper<'a>>, f64),
    Delay(VecDeque<DVector<f64>>),
}

impl<'a> Stepper<'a> {
    fn new(op: &'a SystemOperator, h: f64) -> Result<Self> {
        Ok(match op {
            SystemOperator::Static { f, .. } => Stepper::Static(f),
            SystemOperator::Lti { system, method } => {
                let d = system.discretize(h, *method)?;
                let x = DVector::zeros(d.order());
                Stepper::Lti { d, x }
            }
            SystemOperator::Cascade(stages) => Stepper::Cascade(
                stages
                    .iter()
                    .map(|s| Stepper::new(s, h))
                    .collect::<Result<_>>()?,
            ),
            SystemOperator::Feedback {
                plant,
                controller,
                opts,
            } => Stepper::Feedback {
                plant: Box::new(Stepper::new(plant, h)?),
                controller: Box::new(Stepper::new(controller, h)?),
                opts: *opts,
                warm: DVector::zeros(plant.dim()),
            },
            SystemOperator::Scaled { base, k } => {
                Stepper::Scaled(Box::new(Stepper::new(base, h)?), *k)
            }
            SystemOperator::Delay { steps, dim } => {
                Stepper::Delay(VecDeque::from(vec![DVector::zeros(*dim); *steps]))
            }
        })
    }

    fn output(&self, u: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
        Ok(match self {
            Stepper::Static(f) => u.map(|x| f.eval(x)),
            Stepper::Lti { d, x } => d.output(x, u),
            Stepper::Cascade(stages) => {
                let mut y = u.clone();
                for s in stages {
                    y = s.output(&y, step)?;
                }
                y
            }
            Stepper::Feedback { plant, .. } => {
                let u1 = self.solve_loop(u, step)?;
                plant.output(&u1, step)?
            }
            Stepper::Scaled(base, k) => base.output(u, step)? * *k,
            Stepper::Delay(buf) => buf.front().cloned().unwrap_or_else(|| u.clone()),
        })
    }

    fn advance(&mut self, u: &DVector<f64>, step: usize) -> Result<()> {
        match self {
            Stepper::Static(_) => {}
            Stepper::Lti { d, x } => *x = d.advance(x, u),
            Stepper::Cascade(stages) => {
                let mut y = u.clone();
                for s in stages.iter_mut() {
                    let next = s.output(&y, step)?;
                    s.advance(&y, step)?;
                    y = next;
                }
            }
            Stepper::Feedback { .. } => {
                let u1 = self.solve_loop(u, step)?;
                let Stepper::Feedback {
                    plant,
                    controller,
                    warm,
                    ..
                } = self
                else {
                    unreachable!()
                };
                let y1 = plant.output(&u1, step)?;
                plant.advance(&u1, step)?;
                controller.advance(&y1, step)?;
                *warm = u1;
            }
            Stepper::Scaled(base, _) => base.advance(u, step)?,
            Stepper::Delay(buf) => {
                if !buf.is_empty() {
                    buf.pop_front();
                    buf.push_back(u.clone());
                }
            }
        }
        Ok(())
    }

    /// Relaxed fixed-point iteration for `u1 = e1 - C(P(u1))` at this step.
    fn solve_loop(&self, e1: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
        let Stepper::Feedback {
            plant,
            controller,
            opts,
            warm,
        } = self
        else {
            unreachable!("solve_loop on a non-feedback stepper")
        };
        let mut u1 = warm.clone();
        let mut residual = f64::INFINITY;
        for _ in 0..opts.max_iters {
            let y1 = plant.output(&u1, step)?;
            let target = e1 - controller.output(&y1, step)?;
            let delta = &target - &u1;
            residual = delta.amax();
            if !residual.is_finite() {
                break;
            }
            if residual <= opts.tol * (1.0 + target.amax()) {
                return Ok(target);
            }
            u1 += delta * opts.relaxation;
        }
        Err(AngleError::FeedbackDivergence { step, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: Vec<f64>) -> DiscreteSignal {
        DiscreteSignal::scalar(v, 0.1).unwrap()
    }

    fn lag() -> LtiSystem {
        LtiSystem::from_transfer_function(&[1.0], &[1.0, 1.0]).unwrap()
    }

    fn all_kinds() -> Vec<SystemOperator> {
        let sat = SystemOperator::static_map(
            ScalarFn::Saturation {
                a: 1.0,
                b: 3.0,
                level: 0.5,
            },
            None,
            1,
        )
        .unwrap();
        vec![
            sat.clone(),
            SystemOperator::lti(lag()).unwrap(),
            SystemOperator::cascade(vec![sat.clone(), SystemOperator::lti(lag()).unwrap()])
                .unwrap(),
            SystemOperator::feedback(
                SystemOperator::lti(lag()).unwrap(),
                sat.clone(),
                FeedbackOptions::default(),
            )
            .unwrap(),
            SystemOperator::scaled(sat, 2.5).unwrap(),
            SystemOperator::delay(3, 1).unwrap(),
        ]
    }

    #[test]
    fn static_gain_doubles() {
        let op = SystemOperator::static_map(ScalarFn::Gain { k: 2.0 }, None, 1).unwrap();
        let u = sig(vec![1.0, -0.5, 3.0]);
        assert_eq!(evaluate(&op, &u).unwrap(), u.scale(2.0));
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = DiscreteSignal::zeros(50, 1, 0.1).unwrap();
        for op in all_kinds() {
            assert!(evaluate(&op, &z).unwrap().is_zero(), "{op:?}");
        }
    }

    #[test]
    fn lti_step_response() {
        let op = SystemOperator::lti(lag()).unwrap();
        let h = 1e-3;
        let u = DiscreteSignal::scalar(vec![1.0; 5000], h).unwrap();
        let y = evaluate(&op, &u).unwrap();
        for k in 0..y.len() {
            let t = k as f64 * h;
            assert!((y.sample(k)[0] - (1.0 - (-t).exp())).abs() < 1e-3);
        }
    }

    #[test]
    fn stepper_agrees_with_fast_path() {
        let op = SystemOperator::lti(lag()).unwrap();
        let cas = SystemOperator::cascade(vec![op.clone()]).unwrap();
        let u = DiscreteSignal::from_fn(300, 1, 0.05, |t| vec![(3.0 * t).sin()]).unwrap();
        let a = evaluate(&op, &u).unwrap();
        let b = evaluate(&cas, &u).unwrap();
        for (x, y) in a.as_flat().iter().zip(b.as_flat()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn feedback_with_static_gains() {
        // u1 = e - 1 * (2 u1)  =>  y1 = 2 e / 3
        let p = SystemOperator::static_map(ScalarFn::Gain { k: 2.0 }, None, 1).unwrap();
        let c = SystemOperator::identity(1);
        let fb = SystemOperator::feedback(
            p,
            c,
            FeedbackOptions {
                relaxation: 0.3,
                ..Default::default()
            },
        )
        .unwrap();
        let u = sig(vec![1.0, 2.0, -3.0]);
        let y = evaluate(&fb, &u).unwrap();
        for (yk, uk) in y.as_flat().iter().zip(u.as_flat()) {
            assert!((yk - 2.0 * uk / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn feedback_matches_lti_closed_loop() {
        let p = lag();
        let c = LtiSystem::siso_gain(2.0);
        let g = crate::lti::closed_loop(&p, &c).unwrap();
        let fb = SystemOperator::feedback(
            SystemOperator::lti(p).unwrap(),
            SystemOperator::lti(c).unwrap(),
            FeedbackOptions::default(),
        )
        .unwrap();
        let u = DiscreteSignal::from_fn(2000, 1, 1e-3, |t| vec![(2.0 * t).cos()]).unwrap();
        let y = evaluate(&fb, &u).unwrap();
        let want = evaluate(&SystemOperator::lti(g).unwrap(), &u).unwrap();
        // the sampled loop differs from the sampled closed loop by O(h)
        for (a, b) in y.as_flat().iter().zip(want.as_flat()) {
            assert!((a - b).abs() < 2e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn divergent_loop_reports_step() {
        let p = SystemOperator::static_map(ScalarFn::Gain { k: 5.0 }, None, 1).unwrap();
        let fb =
            SystemOperator::feedback(p, SystemOperator::identity(1), FeedbackOptions::default())
                .unwrap();
        let err = evaluate(&fb, &sig(vec![0.0, 1.0])).unwrap_err();
        assert!(
            matches!(err, AngleError::FeedbackDivergence { step: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn delay_shifts() {
        let op = SystemOperator::delay(2, 1).unwrap();
        let y = evaluate(&op, &sig(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(y.as_flat(), &[0.0, 0.0, 1.0, 2.0]);
        let id = SystemOperator::delay(0, 1).unwrap();
        assert_eq!(
            evaluate(&id, &sig(vec![1.0, 2.0])).unwrap().as_flat(),
            &[1.0, 2.0]
        );
    }

    #[test]
    fn constructors_validate() {
        assert!(SystemOperator::scaled(SystemOperator::identity(1), 0.0).is_err());
        assert!(SystemOperator::cascade(vec![]).is_err());
        assert!(SystemOperator::cascade(vec![
            SystemOperator::identity(1),
            SystemOperator::identity(2)
        ])
        .is_err());
        let s = SectorBound::new(1.0, 3.0).unwrap();
        assert!(SystemOperator::static_map(ScalarFn::Cubic { k: 1.0 }, Some(s), 1).is_err());
        let unstable = LtiSystem::from_transfer_function(&[1.0], &[1.0, -1.0]).unwrap();
        assert!(SystemOperator::lti(unstable).is_err());
        assert!(evaluate(&SystemOperator::identity(2), &sig(vec![1.0])).is_err());
    }

    #[test]
    fn causal_under_truncation() {
        let u = DiscreteSignal::from_fn(200, 1, 0.05, |t| vec![(1.3 * t).sin() + 0.2 * t]).unwrap();
        for op in all_kinds() {
            for t_cut in [0.0, 1.0, 4.95, 20.0] {
                let full = crate::signal::truncate(&evaluate(&op, &u).unwrap(), t_cut).unwrap();
                let cut = crate::signal::truncate(
                    &evaluate(&op, &crate::signal::truncate(&u, t_cut).unwrap()).unwrap(),
                    t_cut,
                )
                .unwrap();
                for (a, b) in full.as_flat().iter().zip(cut.as_flat()) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{op:?} T={t_cut}");
                }
            }
        }
    }
}
