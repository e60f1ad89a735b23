//! Singular-angle analysis of matrices, LTI systems and sampled nonlinear
//! operators, with small-angle stability certificates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod certificate;
pub mod error;
pub mod io;
pub mod lti;
pub mod matrix;
pub mod nonlinear;
pub mod signal;

pub use angle::AngleRadians;
pub use certificate::{
    AngleFlavor, BoundedAngle, LoopReading, Method, Provenance, RuleOptions, StabilityCertificate,
    Tier, Verdict,
};
pub use error::{AngleError, Result};
pub use lti::{FrequencyGrid, LtiOptions, LtiSystem, SectorBound};
pub use matrix::{ComplexMatrix, SolverOptions};
pub use nonlinear::{AngleEstimate, ProbeConfig, ProbeSet, ScalarFn, SystemOperator};
pub use signal::{DiscreteSignal, MultiplierOperator};
