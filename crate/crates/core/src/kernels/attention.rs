//! Attention forward kernels: scaled dot-product, plain multi-head, and the
//! head-mixing variant with learned projections across the head axis.
//!
//! Masking uses a finite -1e9 instead of -inf so NaNs cannot propagate
//! through the head-mixing projections. For the mixing variant the mask is
//! added to the per-head logits before mixing and the masked entries are
//! reset to -1e9 afterwards; mixing happens per (query, key) cell across
//! heads, so unmasked cells are unaffected while arbitrary mixing weights
//! cannot resurrect masked positions.

use super::matrix::Matrix;
use super::KernelError;

/// Finite stand-in for -inf in attention logits.
pub const MASK_VALUE: f64 = -1e9;

/// Row-wise softmax, stabilized by subtracting each row maximum.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        for &e in &exps {
            sum += e;
        }
        for (j, e) in exps.into_iter().enumerate() {
            out.set(i, j, e / sum);
        }
    }
    out
}

fn add_causal_mask(logits: &mut Matrix) {
    for i in 0..logits.rows() {
        for j in (i + 1)..logits.cols() {
            logits.set(i, j, logits.get(i, j) + MASK_VALUE);
        }
    }
}

fn reset_causal_mask(logits: &mut Matrix) {
    for i in 0..logits.rows() {
        for j in (i + 1)..logits.cols() {
            logits.set(i, j, MASK_VALUE);
        }
    }
}

fn check_head_shapes(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<(), KernelError> {
    if q.cols() != k.cols() {
        return Err(KernelError::ShapeMismatch {
            detail: format!("query dim {} != key dim {}", q.cols(), k.cols()),
        });
    }
    if k.rows() != v.rows() {
        return Err(KernelError::ShapeMismatch {
            detail: format!("{} keys vs {} value rows", k.rows(), v.rows()),
        });
    }
    Ok(())
}

fn scaled_logits(q: &Matrix, k: &Matrix) -> Result<Matrix, KernelError> {
    let scale = 1.0 / (k.cols() as f64).sqrt();
    Ok(q.matmul(&k.transpose())?.scale(scale))
}

/// Single-head scaled dot-product attention: `softmax(QK^T / sqrt(d_k)) V`,
/// with positions above the diagonal masked when `causal` is set.
pub fn scaled_dot_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    causal: bool,
) -> Result<Matrix, KernelError> {
    check_head_shapes(q, k, v)?;
    let mut logits = scaled_logits(q, k)?;
    if causal {
        add_causal_mask(&mut logits);
    }
    softmax_rows(&logits).matmul(v)
}

fn check_per_head(qs: &[Matrix], ks: &[Matrix], vs: &[Matrix]) -> Result<(), KernelError> {
    if qs.is_empty() || qs.len() != ks.len() || qs.len() != vs.len() {
        return Err(KernelError::HeadMismatch {
            detail: format!("{} query, {} key, {} value heads", qs.len(), ks.len(), vs.len()),
        });
    }
    for ((q, k), v) in qs.iter().zip(ks).zip(vs) {
        check_head_shapes(q, k, v)?;
        if q.rows() != qs[0].rows() || k.rows() != ks[0].rows() {
            return Err(KernelError::HeadMismatch {
                detail: "heads disagree on sequence lengths".to_string(),
            });
        }
    }
    Ok(())
}

/// Plain multi-head attention over per-head inputs; head outputs are
/// concatenated along the feature axis.
pub fn multi_head_attention(
    qs: &[Matrix],
    ks: &[Matrix],
    vs: &[Matrix],
    causal: bool,
) -> Result<Matrix, KernelError> {
    check_per_head(qs, ks, vs)?;
    let heads: Vec<Matrix> = qs
        .iter()
        .zip(ks)
        .zip(vs)
        .map(|((q, k), v)| scaled_dot_attention(q, k, v, causal))
        .collect::<Result<_, _>>()?;
    Matrix::hconcat(&heads)
}

fn mix_across_heads(stacks: &[Matrix], weights: &Matrix) -> Vec<Matrix> {
    let h = stacks.len();
    let rows = stacks[0].rows();
    let cols = stacks[0].cols();
    let mut mixed = vec![Matrix::zeros(rows, cols); h];
    for i in 0..rows {
        for j in 0..cols {
            for (a, out) in mixed.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (b, stack) in stacks.iter().enumerate() {
                    acc += stack.get(i, j) * weights.get(b, a);
                }
                out.set(i, j, acc);
            }
        }
    }
    mixed
}

/// Head-mixing attention: per-head logits are linearly mixed across the head
/// axis by `w_l` before the softmax, and the attention weights by `w_w`
/// after it. With identity mixers this reduces to [`multi_head_attention`].
pub fn talking_heads_attention(
    qs: &[Matrix],
    ks: &[Matrix],
    vs: &[Matrix],
    w_l: &Matrix,
    w_w: &Matrix,
    causal: bool,
) -> Result<Matrix, KernelError> {
    check_per_head(qs, ks, vs)?;
    let h = qs.len();
    for (name, w) in [("w_l", w_l), ("w_w", w_w)] {
        if w.rows() != h || w.cols() != h {
            return Err(KernelError::HeadMismatch {
                detail: format!("{name} is {}x{}, expected {h}x{h}", w.rows(), w.cols()),
            });
        }
    }

    let mut logits: Vec<Matrix> = qs
        .iter()
        .zip(ks)
        .map(|(q, k)| scaled_logits(q, k))
        .collect::<Result<_, _>>()?;
    if causal {
        for head in &mut logits {
            add_causal_mask(head);
        }
    }
    let mut mixed_logits = mix_across_heads(&logits, w_l);
    if causal {
        for head in &mut mixed_logits {
            reset_causal_mask(head);
        }
    }
    let weights: Vec<Matrix> = mixed_logits.iter().map(softmax_rows).collect();
    let mixed_weights = mix_across_heads(&weights, w_w);
    let outputs: Vec<Matrix> = mixed_weights
        .iter()
        .zip(vs)
        .map(|(w, v)| w.matmul(v))
        .collect::<Result<_, _>>()?;
    Matrix::hconcat(&outputs)
}
