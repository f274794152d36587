//! Gradient-check fixtures shared by the gradient suite and the acceptance run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqvae::nn::gradcheck::grad_check;
use reqvae::nn::loss::softmax_cross_entropy_grad;
use reqvae::nn::{softmax_cross_entropy, Dense, LstmParams, Matrix};
use reqvae::tokenizer::TokenSequence;
use reqvae::vae::{self, LossOptions, PaddedBatch, VaeParams};

pub const TOL: f64 = 1e-4;

pub fn rvec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn dense_report(seed: u64) -> reqvae::nn::GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inp, out, rows) = (
        rng.gen_range(1..5),
        rng.gen_range(1..5),
        rng.gen_range(1..4),
    );
    let x = rvec(rows * inp, &mut rng);
    let r = rvec(rows * out, &mut rng);
    let layer = Dense::<f64>::uniform(inp, out, 0.7, &mut rng);
    let mut flat = layer.weight.as_slice().to_vec();
    flat.extend(&layer.bias);
    flat.extend(&x);
    let nw = out * inp;
    grad_check(
        |p| {
            let l = Dense {
                weight: Matrix::from_vec(out, inp, p[..nw].to_vec()).unwrap(),
                bias: p[nw..nw + out].to_vec(),
            };
            let xs = &p[nw + out..];
            let y = l.forward_batch(xs, rows);
            let loss: f64 = y.iter().zip(&r).map(|(a, b)| a * b).sum();
            let mut g = Dense::zeros(inp, out);
            let mut dx = vec![0.0; rows * inp];
            l.backward_batch(xs, rows, &r, &mut g, Some(&mut dx));
            let mut grad = g.weight.into_vec();
            grad.extend(g.bias);
            grad.extend(dx);
            (loss, grad)
        },
        &flat,
        1e-6,
        seed,
    )
}

/// Loss = Σ r·h over all positions + Σ s·c_final, with random weights r, s.
pub fn lstm_report(
    seed: u64,
    steps: usize,
    batch: usize,
    masked: bool,
) -> reqvae::nn::GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, h) = (rng.gen_range(1..4), rng.gen_range(1..5));
    let reverse = rng.gen_bool(0.5);
    let p = LstmParams::<f64>::uniform(d, h, &mut rng);
    let xs = rvec(steps * batch * d, &mut rng);
    let h0 = rvec(batch * h, &mut rng);
    let c0 = rvec(batch * h, &mut rng);
    let r = rvec(steps * batch * h, &mut rng);
    let s = rvec(batch * h, &mut rng);
    let lengths: Vec<usize> = (0..batch)
        .map(|_| {
            if masked {
                rng.gen_range(1..=steps)
            } else {
                steps
            }
        })
        .collect();
    let mask: Vec<bool> = (0..steps)
        .flat_map(|t| lengths.iter().map(move |&l| t < l))
        .collect();

    let (nw, nu, nb) = (4 * h * d, 4 * h * h, 4 * h);
    let mut flat = p.w.as_slice().to_vec();
    flat.extend(p.u.as_slice());
    flat.extend(&p.b);
    flat.extend(&xs);
    flat.extend(&h0);
    flat.extend(&c0);
    grad_check(
        |q| {
            let mut o = 0;
            let mut take = |n: usize| {
                let v = q[o..o + n].to_vec();
                o += n;
                v
            };
            let lp = LstmParams {
                w: Matrix::from_vec(4 * h, d, take(nw)).unwrap(),
                u: Matrix::from_vec(4 * h, h, take(nu)).unwrap(),
                b: take(nb),
            };
            let x = take(steps * batch * d);
            let hi = take(batch * h);
            let ci = take(batch * h);
            let tr = lp.forward_batch(&x, steps, batch, &mask, reverse, Some((&hi, &ci)));
            let loss: f64 = tr
                .hidden_states()
                .iter()
                .zip(&r)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + tr.final_cell()
                    .iter()
                    .zip(&s)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            let mut g = LstmParams::zeros(d, h);
            let ig = lp.backward_batch(&tr, Some(&r), None, Some(&s), &mut g);
            let mut grad = g.w.into_vec();
            grad.extend(g.u.into_vec());
            grad.extend(g.b);
            grad.extend(ig.dx);
            grad.extend(ig.dh0);
            grad.extend(ig.dc0);
            (loss, grad)
        },
        &flat,
        TOL,
        seed,
    )
}

pub fn softmax_report(seed: u64) -> reqvae::nn::GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = rng.gen_range(2..9);
    let target = rng.gen_range(0..v);
    let logits: Vec<f64> = (0..v).map(|_| rng.gen_range(-3.0..3.0)).collect();
    grad_check(
        |p| {
            let (loss, probs) = softmax_cross_entropy(p, target).unwrap();
            (loss, softmax_cross_entropy_grad(&probs, target))
        },
        &logits,
        TOL,
        seed,
    )
}

/// Tiny VAE: embedding dim 3, hidden 4, latent 2, vocabulary 7.
pub fn elbo_report(seed: u64, word_dropout: f64, samples: usize) -> reqvae::nn::GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let emb = Matrix::<f64>::uniform(7, 3, 0.5, &mut rng);
    let params = VaeParams::init(emb, 4, 2, seed);
    let seqs = vec![
        TokenSequence(vec![1, 4, 5, 6, 2]),
        TokenSequence(vec![1, 6, 3, 2]),
        TokenSequence(vec![1, 2]),
    ];
    let batch = PaddedBatch::new(&seqs).unwrap();
    let options = LossOptions::training(0.7, word_dropout, samples);
    let seeds = [seed, seed + 100, seed + 200];
    let flat = params.flatten();
    let mut work = params.clone();
    grad_check(
        |p| {
            work.assign_flat(p).unwrap();
            let (loss, grad) = vae::loss_and_gradient(&work, &batch, &options, &seeds).unwrap();
            (loss.mean.total, grad.flatten())
        },
        &flat,
        TOL,
        seed,
    )
}
