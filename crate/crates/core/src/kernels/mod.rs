//! Forward-pass numeric kernels for the attention variants and their
//! decoder-layer compositions. Pure, deterministic, and reentrant.

// index loops here mirror the tensor arithmetic and walk several matrices at
// once; iterator rewrites obscure that
#![allow(clippy::needless_range_loop)]

pub mod attention;
pub mod checks;
pub mod decoder;
pub mod matrix;

pub use attention::{
    multi_head_attention, scaled_dot_attention, softmax_rows, talking_heads_attention, MASK_VALUE,
};
pub use decoder::{
    aan_context, build_stack, decoder_layer_forward, decoder_stack_forward, dual_attention,
    exp_weighted_context, exp_weighted_context_seeded, AttentionParams, DecoderLayerParams,
    FfnParams, LayerKind, LayerNormParams, LayerSpec, NormPlacement, StackPattern, StackSpec,
};
pub use matrix::Matrix;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error("head mismatch: {detail}")]
    HeadMismatch { detail: String },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("alpha must lie in [0, 1), got {got}")]
    InvalidAlpha { got: f64 },
    #[error("a stack needs at least one layer")]
    EmptyStack,
}
