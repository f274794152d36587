//! Finite-difference verification of every hand-derived backward pass.

mod common;

use common::{dense_report, elbo_report, lstm_report, softmax_report, TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqvae::nn::Matrix;
use reqvae::tokenizer::TokenSequence;
use reqvae::vae::{self, LossOptions, PaddedBatch, VaeParams};

#[test]
fn dense_layer() {
    let r = dense_report(1);
    assert!(r.passed, "{r}");
    assert!(r.max_rel_error < 1e-6);
}

#[test]
fn lstm_cell_single_step() {
    for seed in 0..5 {
        let r = lstm_report(seed, 1, 1, false);
        assert!(r.passed, "{r}");
    }
}

#[test]
fn lstm_sequence_with_masking() {
    for seed in 0..5 {
        let r = lstm_report(seed, 4, 3, true);
        assert!(r.passed, "{r}");
    }
}

#[test]
fn softmax_cross_entropy_logits() {
    let r = softmax_report(4);
    assert!(r.passed, "{r}");
}

#[test]
fn full_elbo_tiny_dims() {
    let r = elbo_report(11, 0.0, 1);
    assert!(r.passed, "{r}");
    let r = elbo_report(12, 0.5, 2);
    assert!(r.passed, "{r}");
}

#[test]
fn every_layer_passes_over_twenty_seeds() {
    for seed in 100..120 {
        for r in [
            dense_report(seed),
            lstm_report(seed, 1, 1, false),
            lstm_report(seed, 3, 2, true),
            softmax_report(seed),
        ] {
            assert!(r.passed, "seed {seed}: {r}");
        }
    }
}

/// Central differences at step 1e-5 carry ~1e-10 absolute round-off on a
/// loss of a few nats, so coordinates with |g| below ~1e-6 cannot be
/// resolved to 1e-4 relative. Across many random tiny models, check the
/// resolvable coordinates relatively and the rest absolutely.
#[test]
fn elbo_gradient_over_twenty_seeds() {
    use reqvae::nn::gradcheck::{relative_error, FD_STEP};
    for seed in 100..120 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb = Matrix::<f64>::uniform(7, 3, 0.5, &mut rng);
        let params = VaeParams::init(emb, 4, 2, seed);
        let seqs = vec![
            TokenSequence(vec![1, 4, 5, 6, 2]),
            TokenSequence(vec![1, 3, 2]),
        ];
        let batch = PaddedBatch::new(&seqs).unwrap();
        let options = LossOptions::training(0.5, 0.25, 1);
        let seeds = [seed, seed + 1];
        let (_, grad) = vae::loss_and_gradient(&params, &batch, &options, &seeds).unwrap();
        let analytic = grad.flatten();
        let mut work = params.clone();
        let mut p = params.flatten();
        for i in 0..p.len() {
            let orig = p[i];
            let mut eval = |x: f64, p: &mut Vec<f64>| {
                p[i] = x;
                work.assign_flat(p).unwrap();
                vae::forward(&work, &batch, &options, &seeds)
                    .unwrap()
                    .0
                    .mean
                    .total
            };
            let numeric =
                (eval(orig + FD_STEP, &mut p) - eval(orig - FD_STEP, &mut p)) / (2.0 * FD_STEP);
            p[i] = orig;
            if analytic[i].abs() >= 1e-6 {
                assert!(
                    relative_error(analytic[i], numeric) < TOL,
                    "seed {seed} coord {i}"
                );
            } else {
                assert!(
                    (analytic[i] - numeric).abs() < 1e-9,
                    "seed {seed} coord {i}"
                );
            }
        }
    }
}
