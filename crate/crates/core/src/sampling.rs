//! Decoding-distribution samplers for synthetic-data generation: top-K,
//! nucleus (top-p), and the dynamic top-p schedule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dynamic top-p schedule endpoints.
pub const DYNAMIC_P_START: f64 = 0.9;
pub const DYNAMIC_P_END: f64 = 0.95;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("distribution invalid: {reason}")]
    InvalidDistribution { reason: String },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("p must lie in (0, 1], got {got}")]
    InvalidP { got: f64 },
}

/// Sampler configuration mirrored by the CLI flags.
#[derive(Debug, Clone)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub k: usize,
    pub p: f64,
    pub p_start: f64,
    pub p_end: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    TopK,
    TopP,
    DynamicTopP,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            kind: SamplerKind::TopK,
            k: 10,
            p: 0.95,
            p_start: DYNAMIC_P_START,
            p_end: DYNAMIC_P_END,
            seed: 0,
        }
    }
}

impl SamplerSpec {
    /// Samples one index; `progress` in [0, 1] drives the dynamic-p schedule
    /// and is ignored by the other kinds.
    pub fn sample(
        &self,
        dist: &[f64],
        progress: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<usize, SamplingError> {
        match self.kind {
            SamplerKind::TopK => sample_topk(dist, self.k, rng),
            SamplerKind::TopP => sample_topp(dist, self.p, rng),
            SamplerKind::DynamicTopP => {
                let progress = progress.clamp(0.0, 1.0);
                let p = self.p_start + (self.p_end - self.p_start) * progress;
                sample_topp(dist, p, rng)
            }
        }
    }
}

fn validate_distribution(dist: &[f64]) -> Result<(), SamplingError> {
    if dist.is_empty() {
        return Err(SamplingError::InvalidDistribution {
            reason: "empty".to_string(),
        });
    }
    if let Some(bad) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(SamplingError::InvalidDistribution {
            reason: format!("entry {bad} is negative or non-finite"),
        });
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(SamplingError::InvalidDistribution {
            reason: format!("sums to {sum}, expected 1"),
        });
    }
    Ok(())
}

/// Indices sorted by probability descending, index ascending on ties.
fn ranked_indices(dist: &[f64]) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..dist.len()).collect();
    indices.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    indices
}

/// The `k` highest-probability indices (ties at the boundary go to the lower
/// index). The flag reports whether `k` exceeded the vocabulary and was
/// clamped.
pub fn top_k_indices(dist: &[f64], k: usize) -> (Vec<usize>, bool) {
    let clamped = k > dist.len();
    let k = k.min(dist.len());
    let mut indices = ranked_indices(dist);
    indices.truncate(k);
    (indices, clamped)
}

/// The nucleus: the smallest prefix of the descending-sorted distribution
/// whose cumulative mass strictly exceeds `p`.
pub fn nucleus_indices(dist: &[f64], p: f64) -> Vec<usize> {
    let ranked = ranked_indices(dist);
    let mut nucleus = Vec::new();
    let mut mass = 0.0;
    for index in ranked {
        mass += dist[index];
        nucleus.push(index);
        if mass > p {
            break;
        }
    }
    nucleus
}

fn sample_within(dist: &[f64], members: &[usize], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = members.iter().map(|&i| dist[i]).sum();
    if total <= 0.0 {
        // all-zero support (possible when k exceeds the nonzero entries):
        // fall back to the best-ranked member
        return members[0];
    }
    let mut draw = rng.gen::<f64>() * total;
    for &index in members {
        draw -= dist[index];
        if draw <= 0.0 {
            return index;
        }
    }
    *members.last().expect("members checked non-empty")
}

/// Samples among the `k` highest-probability entries, proportionally to their
/// renormalized probabilities. `k` larger than the vocabulary is clamped.
pub fn sample_topk(dist: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Result<usize, SamplingError> {
    validate_distribution(dist)?;
    if k == 0 {
        return Err(SamplingError::ZeroK);
    }
    let (members, _clamped) = top_k_indices(dist, k);
    Ok(sample_within(dist, &members, rng))
}

/// Samples within the nucleus, proportionally to renormalized probabilities.
pub fn sample_topp(dist: &[f64], p: f64, rng: &mut ChaCha8Rng) -> Result<usize, SamplingError> {
    validate_distribution(dist)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(SamplingError::InvalidP { got: p });
    }
    let members = nucleus_indices(dist, p);
    Ok(sample_within(dist, &members, rng))
}

/// The dynamic top-p value at a generation progress fraction: linear from
/// 0.9 at the start to 0.95 at the end. Out-of-range progress is clamped.
pub fn dynamic_p(progress: f64) -> f64 {
    let progress = progress.clamp(0.0, 1.0);
    DYNAMIC_P_START + (DYNAMIC_P_END - DYNAMIC_P_START) * progress
}
