//! Seeded probe signals for the sampled angle estimators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{AngleError, Result};
use crate::signal::DiscreteSignal;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub count: usize,
    pub sample_period: f64,
    /// Samples carrying the excitation.
    pub support_steps: usize,
    /// Zero samples appended so that transient outputs can decay.
    pub tail_steps: usize,
    /// Amplitudes are drawn log-uniformly from this range.
    pub amplitude: (f64, f64),
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            count: 64,
            sample_period: 0.01,
            support_steps: 1000,
            tail_steps: 1000,
            amplitude: (1e-2, 1e2),
            seed: 42,
        }
    }
}

/// Probe signals with labels, plus the seed that generated them (if any).
#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub signals: Vec<DiscreteSignal>,
    pub labels: Vec<String>,
    pub seed: Option<u64>,
}

impl ProbeSet {
    pub fn from_signals(signals: Vec<DiscreteSignal>) -> Result<Self> {
        if signals.is_empty() {
            return Err(AngleError::Empty("probe set"));
        }
        let labels = (0..signals.len()).map(|i| format!("probe-{i}")).collect();
        Ok(ProbeSet {
            signals,
            labels,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.signals.first().map_or(0, DiscreteSignal::dim)
    }

    /// `(u_i, 0)` for every probe, then `(u_i, u_j)` for `i < j`.
    pub fn incremental_pairs(&self) -> Vec<(DiscreteSignal, DiscreteSignal)> {
        let mut pairs = Vec::new();
        for u in &self.signals {
            let zero =
                DiscreteSignal::zeros(u.len(), u.dim(), u.sample_period()).expect("valid shape");
            pairs.push((u.clone(), zero));
        }
        for i in 0..self.signals.len() {
            for j in i + 1..self.signals.len() {
                pairs.push((self.signals[i].clone(), self.signals[j].clone()));
            }
        }
        pairs
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Tone,
    Step,
    Chirp,
    Noise,
}

const KINDS: [Kind; 4] = [Kind::Tone, Kind::Step, Kind::Chirp, Kind::Noise];

/// Cycles through tones, steps, decaying chirps and noise bursts, each
/// channel drawn independently.
pub fn probe_library(dim: usize, cfg: &ProbeConfig) -> Result<ProbeSet> {
    if cfg.count == 0 || cfg.support_steps == 0 || dim == 0 {
        return Err(AngleError::Empty("probe library"));
    }
    let (lo, hi) = cfg.amplitude;
    if !(lo > 0.0 && hi >= lo && cfg.sample_period > 0.0) {
        return Err(AngleError::InvalidArgument(format!(
            "bad probe config {cfg:?}"
        )));
    }
    let h = cfg.sample_period;
    let n = cfg.support_steps;
    let span = n as f64 * h;
    // tones from one period over the support up to a quarter of Nyquist
    let (w_lo, w_hi) = (2.0 * PI / span, 0.25 * PI / h);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut signals = Vec::with_capacity(cfg.count);
    let mut labels = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let kind = KINDS[i % KINDS.len()];
        let mut data = vec![0.0; (n + cfg.tail_steps) * dim];
        for ch in 0..dim {
            let amp = log_uniform(&mut rng, lo, hi) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let wave = waveform(kind, &mut rng, n, h, w_lo, w_hi);
            for (k, v) in wave.into_iter().enumerate() {
                data[k * dim + ch] = amp * v;
            }
        }
        signals.push(DiscreteSignal::from_flat(data, dim, h)?);
        labels.push(format!("{kind:?}-{i}").to_lowercase());
    }
    Ok(ProbeSet {
        signals,
        labels,
        seed: Some(cfg.seed),
    })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        return lo;
    }
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn waveform(kind: Kind, rng: &mut ChaCha8Rng, n: usize, h: f64, w_lo: f64, w_hi: f64) -> Vec<f64> {
    let t = |k: usize| k as f64 * h;
    match kind {
        Kind::Tone => {
            let w = log_uniform(rng, w_lo, w_hi);
            let phase = rng.random_range(0.0..2.0 * PI);
            (0..n).map(|k| (w * t(k) + phase).sin()).collect()
        }
        Kind::Step => {
            let start = rng.random_range(0..n);
            (0..n).map(|k| if k >= start { 1.0 } else { 0.0 }).collect()
        }
        Kind::Chirp => {
            let w0 = log_uniform(rng, w_lo, w_hi);
            let w1 = log_uniform(rng, w_lo, w_hi);
            let span = n as f64 * h;
            let decay = rng.random_range(0.0..5.0) / span;
            (0..n)
                .map(|k| {
                    let tk = t(k);
                    let phase = w0 * tk + 0.5 * (w1 - w0) * tk * tk / span;
                    (-decay * tk).exp() * phase.sin()
                })
                .collect()
        }
        Kind::Noise => {
            let start = rng.random_range(0..n);
            let len = rng.random_range(1..=n - start);
            (0..n)
                .map(|k| {
                    if k >= start && k < start + len {
                        StandardNormal.sample(rng)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}
