//! Minimal numeric kernel: dense and LSTM layers with exact gradients,
//! softmax cross-entropy, Adam, and finite-difference verification.

pub mod adam;
pub mod dense;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod matrix;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use dense::{dense_forward, Dense};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{softmax_cross_entropy, softmax_cross_entropy_grad};
pub use lstm::{
    lstm_cell_forward, lstm_sequence_forward, LstmParams, LstmSequenceOutput, LstmTrace,
};
pub use matrix::Matrix;
