//! Sentence VAE: bidirectional LSTM encoder → diagonal Gaussian posterior →
//! LSTM decoder conditioned on `z` through its initial state and at every
//! step. Minimizing [`LossBreakdown::total`] maximizes the ELBO.

mod model;
mod objective;
mod params;

pub use model::{
    backward, decode, elbo_loss, encode, forward, loss_and_gradient, sample_seed, BatchLoss,
    DecoderState, ForwardTrace, LossOptions, PaddedBatch,
};
pub use objective::{kl_divergence, reparameterize, LatentCode, LossBreakdown};
pub use params::{DecoderParams, EncoderParams, VaeDims, VaeParams, TENSOR_NAMES};

pub const DEFAULT_Z_DIM: usize = 16;
pub const DEFAULT_HIDDEN_SIZE: usize = 128;
