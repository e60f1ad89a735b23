//! JSON descriptions of matrices, systems and operators, and CSV emitters.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AngleError, Result};
use crate::lti::{Discretization, LtiSystem, Rational, SectorBound, SweepPoint};
use crate::matrix::{ComplexMatrix, NormalizedRangeSample};
use crate::nonlinear::{FeedbackOptions, ScalarFn, SystemOperator};
use crate::signal::DiscreteSignal;

/// Significant digits for every number written by this module.
pub const SIG_DIGITS: usize = 9;

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Text form used in CSV cells: rounded, with `inf`/`-inf`/`nan` spelled out.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{}", round_sig(x))
    }
}

/// Rounds every float inside a JSON value.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with all floats rounded to [`SIG_DIGITS`] digits.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| AngleError::Numerical(e.to_string()))?;
    round_json(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| AngleError::Numerical(e.to_string()))
}

fn parse_err(e: serde_json::Error) -> AngleError {
    AngleError::Parse(e.to_string())
}

/// `{ "n": 3, "entries": [[[re, im], ...], ...] }`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.entries.len() != self.n || self.entries.iter().any(|r| r.len() != self.n) {
            return Err(AngleError::Parse(format!(
                "entries must form an {0}x{0} array",
                self.n
            )));
        }
        let rows: Vec<Vec<Complex64>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows)
    }

    pub fn from_matrix(a: &ComplexMatrix) -> Self {
        let m = a.as_matrix();
        MatrixFile {
            n: a.n(),
            entries: (0..a.n())
                .map(|i| (0..a.n()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    serde_json::from_str::<MatrixFile>(text)
        .map_err(parse_err)?
        .to_matrix()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpaceFile {
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

/// `{ "ss": {"A", "B", "C", "D"} }` or `{ "tf": {"num", "den"} }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemFile {
    Ss(StateSpaceFile),
    Tf(Rational),
}

fn dense(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(AngleError::Parse(format!("{name} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl SystemFile {
    pub fn to_system(&self) -> Result<LtiSystem> {
        match self {
            SystemFile::Tf(r) => LtiSystem::from_transfer_function(&r.num, &r.den),
            SystemFile::Ss(s) => {
                let n = s.d.len();
                let m = s.a.len();
                let a = dense(&s.a, m, m, "A")?;
                let b = if m == 0 {
                    DMatrix::zeros(0, n)
                } else {
                    dense(&s.b, m, n, "B")?
                };
                let c = if m == 0 {
                    DMatrix::zeros(n, 0)
                } else {
                    dense(&s.c, n, m, "C")?
                };
                let d = dense(&s.d, n, n, "D")?;
                LtiSystem::from_state_space(a, b, c, d)
            }
        }
    }

    pub fn from_system(p: &LtiSystem) -> Self {
        if let Some(r) = p.rational() {
            return SystemFile::Tf(r.clone());
        }
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        let ss = p.state_space();
        SystemFile::Ss(StateSpaceFile {
            a: rows(&ss.a),
            b: rows(&ss.b),
            c: rows(&ss.c),
            d: rows(&ss.d),
        })
    }
}

pub fn parse_system(text: &str) -> Result<LtiSystem> {
    serde_json::from_str::<SystemFile>(text)
        .map_err(parse_err)?
        .to_system()
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizationName {
    #[default]
    Zoh,
    Bilinear,
}

/// Operator description, tagged by `kind`; composites nest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorFile {
    Static {
        #[serde(flatten)]
        f: ScalarFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sector: Option<(f64, f64)>,
        #[serde(default = "one")]
        dim: usize,
    },
    Lti {
        #[serde(flatten)]
        system: SystemFile,
        #[serde(default)]
        discretization: DiscretizationName,
    },
    Cascade {
        stages: Vec<OperatorFile>,
    },
    Feedback {
        plant: Box<OperatorFile>,
        controller: Box<OperatorFile>,
        #[serde(default)]
        options: FeedbackOptions,
    },
    Scaled {
        base: Box<OperatorFile>,
        k: f64,
    },
    Delay {
        steps: usize,
        #[serde(default = "one")]
        dim: usize,
    },
}

impl OperatorFile {
    pub fn to_operator(&self) -> Result<SystemOperator> {
        match self {
            OperatorFile::Static { f, sector, dim } => {
                let sector = sector.map(|(a, b)| SectorBound::new(a, b)).transpose()?;
                SystemOperator::static_map(f.clone(), sector, *dim)
            }
            OperatorFile::Lti {
                system,
                discretization,
            } => {
                let op = SystemOperator::lti(system.to_system()?)?;
                Ok(match (op, discretization) {
                    (SystemOperator::Lti { system, .. }, DiscretizationName::Bilinear) => {
                        SystemOperator::Lti {
                            system,
                            method: Discretization::Bilinear,
                        }
                    }
                    (op, _) => op,
                })
            }
            OperatorFile::Cascade { stages } => SystemOperator::cascade(
                stages
                    .iter()
                    .map(OperatorFile::to_operator)
                    .collect::<Result<_>>()?,
            ),
            OperatorFile::Feedback {
                plant,
                controller,
                options,
            } => {
                SystemOperator::feedback(plant.to_operator()?, controller.to_operator()?, *options)
            }
            OperatorFile::Scaled { base, k } => SystemOperator::scaled(base.to_operator()?, *k),
            OperatorFile::Delay { steps, dim } => SystemOperator::delay(*steps, *dim),
        }
    }
}

pub fn parse_operator(text: &str) -> Result<SystemOperator> {
    serde_json::from_str::<OperatorFile>(text)
        .map_err(parse_err)?
        .to_operator()
}

/// Either an operator (has a `kind` key) or a bare LTI system description.
pub fn parse_operator_or_system(text: &str) -> Result<SystemOperator> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    if v.get("kind").is_some() {
        serde_json::from_value::<OperatorFile>(v)
            .map_err(parse_err)?
            .to_operator()
    } else {
        SystemOperator::lti(
            serde_json::from_value::<SystemFile>(v)
                .map_err(parse_err)?
                .to_system()?,
        )
    }
}

fn csv_err(e: impl std::fmt::Display) -> AngleError {
    AngleError::Numerical(format!("csv output: {e}"))
}

/// Normalized numerical range samples as `re, im` rows.
pub fn write_range_csv(samples: &[NormalizedRangeSample], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["re", "im"]).map_err(csv_err)?;
    for s in samples {
        w.write_record([format_number(s.point.re), format_number(s.point.im)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Angle sweep as `omega, angle_rad, cos_theta` rows.
pub fn write_sweep_csv(points: &[SweepPoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "angle_rad", "cos_theta"])
        .map_err(csv_err)?;
    for p in points {
        w.write_record([
            format_number(p.omega),
            format_number(p.angle),
            format_number(p.cos_theta),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Signal as `t, x1, ..., xn` rows.
pub fn write_signal_csv(u: &DiscreteSignal, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=u.dim()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (k, s) in u.samples().enumerate() {
        let mut row = vec![format_number(k as f64 * u.sample_period())];
        row.extend(s.iter().map(|v| format_number(*v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
