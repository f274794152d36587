//! Sentence-generating variational autoencoder for software requirements.
//!
//! The pipeline runs corpus cleaning → tokenization → embedding lookup →
//! VAE training → generation (prior sampling, reconstruction, latent
//! interpolation). Each stage lives in its own module; `examples/` shows
//! them one at a time and the `reqvae` binary wires them together.

pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod generator;
mod io;
pub mod nn;
pub mod real;
pub mod synthetic;
pub mod tokenizer;
pub mod trainer;
pub mod vae;

pub use error::{Error, Result};
pub use real::Real;
