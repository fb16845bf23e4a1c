//! Pure decision functions for the finetuning strategies: decoding-step
//! scheduled-sampling decays, confidence-aware token scheduling, and
//! graduated label smoothing. Nothing here runs a model forward pass; the
//! functions turn confidences and distributions into decisions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid decay parameters: {detail}")]
    InvalidDecay { detail: String },
    #[error("gold index {index} out of range for vocabulary of {len}")]
    GoldIndexOutOfRange { index: usize, len: usize },
    #[error("distribution sums to {sum}, expected 1")]
    UnnormalizedDistribution { sum: f64 },
    #[error("invalid thresholds: need 0 < t_golden <= t_rand <= 1, got {golden} and {rand}")]
    InvalidThresholds { golden: f64, rand: f64 },
    #[error("smoothing value must lie in [0, 1) with vocab size >= 2")]
    InvalidSmoothing,
}

/// Shape of the probability-of-golden-token decay g(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Linear,
    Exponential,
    InvSigmoid,
}

/// Decay parameters. `k` is the slope (linear, negative), radix
/// (exponential, in (0,1)) or steepness (inverse sigmoid, >= 1); `b` and
/// `epsilon` are the linear offset and floor.
#[derive(Debug, Clone, Copy)]
pub struct DecayParams {
    pub kind: DecayKind,
    pub k: f64,
    pub b: f64,
    pub epsilon: f64,
}

impl DecayParams {
    /// Linear decay `max(epsilon, k t + b)`; requires `k < 0`.
    pub fn linear(k: f64, b: f64, epsilon: f64) -> Result<Self, ScheduleError> {
        let params = DecayParams {
            kind: DecayKind::Linear,
            k,
            b,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Exponential decay `k^t`; requires `0 < k < 1`. The default radix is
    /// 0.99.
    pub fn exponential(k: f64) -> Result<Self, ScheduleError> {
        let params = DecayParams {
            kind: DecayKind::Exponential,
            k,
            b: 0.0,
            epsilon: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Inverse sigmoid decay `k / (k + e^(t/k))`; requires `k >= 1`.
    pub fn inv_sigmoid(k: f64) -> Result<Self, ScheduleError> {
        let params = DecayParams {
            kind: DecayKind::InvSigmoid,
            k,
            b: 0.0,
            epsilon: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let ok = match self.kind {
            DecayKind::Linear => self.k < 0.0 && self.epsilon >= 0.0,
            DecayKind::Exponential => self.k > 0.0 && self.k < 1.0,
            DecayKind::InvSigmoid => self.k >= 1.0,
        };
        if ok && self.k.is_finite() && self.b.is_finite() && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(ScheduleError::InvalidDecay {
                detail: format!("{self:?}"),
            })
        }
    }
}

impl Default for DecayParams {
    /// The default schedule: exponential with radix 0.99.
    fn default() -> Self {
        DecayParams {
            kind: DecayKind::Exponential,
            k: 0.99,
            b: 0.0,
            epsilon: 0.0,
        }
    }
}

/// Probability of keeping the golden token at decoding step `t`, clamped to
/// [0, 1].
pub fn decay(t: u64, params: &DecayParams) -> Result<f64, ScheduleError> {
    params.validate()?;
    let t = t as f64;
    let g = match params.kind {
        DecayKind::Linear => (params.k * t + params.b).max(params.epsilon),
        DecayKind::Exponential => params.k.powf(t),
        DecayKind::InvSigmoid => params.k / (params.k + (t / params.k).exp()),
    };
    Ok(g.clamp(0.0, 1.0))
}

/// Confidence thresholds of the token schedules.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceThresholds {
    pub t_golden: f64,
    pub t_rand: f64,
}

impl Default for ConfidenceThresholds {
    fn default() -> Self {
        ConfidenceThresholds {
            t_golden: 0.9,
            t_rand: 0.95,
        }
    }
}

impl ConfidenceThresholds {
    pub fn new(t_golden: f64, t_rand: f64) -> Result<Self, ScheduleError> {
        if 0.0 < t_golden && t_golden <= t_rand && t_rand <= 1.0 {
            Ok(ConfidenceThresholds { t_golden, t_rand })
        } else {
            Err(ScheduleError::InvalidThresholds {
                golden: t_golden,
                rand: t_rand,
            })
        }
    }
}

/// Model confidence at a position: the probability assigned to the gold
/// token.
pub fn model_confidence(dist: &[f64], gold_index: usize) -> Result<f64, ScheduleError> {
    if gold_index >= dist.len() {
        return Err(ScheduleError::GoldIndexOutOfRange {
            index: gold_index,
            len: dist.len(),
        });
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(ScheduleError::UnnormalizedDistribution { sum });
    }
    Ok(dist[gold_index])
}

/// Two-way schedule: keep the golden token while confidence is at most
/// `t_golden` (boundary inclusive), otherwise take the prediction.
pub fn confidence_schedule_basic<T>(
    conf: f64,
    golden: T,
    predicted: T,
    thresholds: &ConfidenceThresholds,
) -> T {
    if conf <= thresholds.t_golden {
        golden
    } else {
        predicted
    }
}

/// Three-way schedule: golden up to `t_golden`, predicted up to `t_rand`,
/// and a random token above that, so high-confidence positions see extra
/// noise instead of degenerating into teacher forcing.
pub fn confidence_schedule_noisy<T>(
    conf: f64,
    golden: T,
    predicted: T,
    random_token: T,
    thresholds: &ConfidenceThresholds,
) -> T {
    if conf <= thresholds.t_golden {
        golden
    } else if conf <= thresholds.t_rand {
        predicted
    } else {
        random_token
    }
}

/// Confidence-banded smoothing penalty: 0.3 above 0.7, zero below 0.3, and
/// 0.1 in the middle band (both boundaries fall in the middle band).
pub fn graduated_smoothing_penalty(conf: f64) -> f64 {
    if conf > 0.7 {
        0.3
    } else if conf < 0.3 {
        0.0
    } else {
        0.1
    }
}

/// Label-smoothed target distribution: the gold index gets `1 - s`, every
/// other index `s / (V - 1)`.
pub fn smoothed_target_distribution(
    gold_index: usize,
    vocab_size: usize,
    smoothing: f64,
) -> Result<Vec<f64>, ScheduleError> {
    if vocab_size < 2 || !(0.0..1.0).contains(&smoothing) {
        return Err(ScheduleError::InvalidSmoothing);
    }
    if gold_index >= vocab_size {
        return Err(ScheduleError::GoldIndexOutOfRange {
            index: gold_index,
            len: vocab_size,
        });
    }
    let off = smoothing / (vocab_size - 1) as f64;
    let mut dist = vec![off; vocab_size];
    dist[gold_index] = 1.0 - smoothing;
    Ok(dist)
}
