//! Verifies the analytic gradient of the full VAE objective against central
//! finite differences on a tiny model in 64-bit arithmetic.
//!
//! cargo run --release --example gradient_check [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqvae::nn::{grad_check, Matrix};
use reqvae::tokenizer::TokenSequence;
use reqvae::vae::{loss_and_gradient, LossOptions, PaddedBatch, VaeParams};

fn main() -> reqvae::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(11);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Vocabulary 7, embedding 3, hidden 4, latent 2.
    let params = VaeParams::init(Matrix::<f64>::uniform(7, 3, 0.5, &mut rng), 4, 2, seed);
    let batch = PaddedBatch::new(&[
        TokenSequence(vec![1, 4, 5, 6, 2]),
        TokenSequence(vec![1, 6, 3, 2]),
        TokenSequence(vec![1, 2]),
    ])?;
    let options = LossOptions::training(0.7, 0.0, 1);
    let seeds = [seed, seed + 100, seed + 200];
    println!("{} parameters", params.num_parameters());

    let mut work = params.clone();
    let report = grad_check(
        |p| {
            work.assign_flat(p).unwrap();
            let (loss, grad) = loss_and_gradient(&work, &batch, &options, &seeds).unwrap();
            (loss.mean.total, grad.flatten())
        },
        &params.flatten(),
        1e-4,
        seed,
    );
    println!("{report}");
    Ok(())
}
