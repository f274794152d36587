//! Batched forward and backward passes of the sentence VAE.
//!
//! Sequences in a batch are padded with `PAD`; every buffer below is
//! time-major (`steps × batch × width`). Padded positions are masked out of
//! the recurrences, the loss and the accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::objective::{kl_terms, LatentCode, LossBreakdown};
use super::params::VaeParams;
use crate::error::{Error, Result};
use crate::nn::loss::softmax_in_place;
use crate::nn::lstm::LstmTrace;
use crate::nn::Matrix;
use crate::real::Real;
use crate::tokenizer::{TokenSequence, EOS, PAD, SOS, UNK};

/// Token sequences padded to a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    /// `batch × steps`, `PAD` filled.
    tokens: Vec<usize>,
    lengths: Vec<usize>,
    steps: usize,
}

impl PaddedBatch {
    /// Every sequence must start with `SOS`, end with `EOS`, and hold at
    /// least those two tokens.
    pub fn new<S: AsRef<[usize]>>(seqs: &[S]) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        for s in seqs {
            let s = s.as_ref();
            if s.len() < 2 || s[0] != SOS || s[s.len() - 1] != EOS {
                return Err(Error::Contract(format!(
                    "sequence must be [SOS, …, EOS], got {s:?}"
                )));
            }
        }
        let steps = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        Self::with_steps(seqs, steps)
    }

    /// Pads to exactly `steps` positions (at least the longest sequence).
    pub fn with_steps<S: AsRef<[usize]>>(seqs: &[S], steps: usize) -> Result<Self> {
        let longest = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        if steps < longest {
            return Err(Error::Contract(format!(
                "{steps} steps < longest sequence {longest}"
            )));
        }
        let mut tokens = vec![PAD; seqs.len() * steps];
        for (b, s) in seqs.iter().enumerate() {
            let s = s.as_ref();
            tokens[b * steps..b * steps + s.len()].copy_from_slice(s);
        }
        Ok(PaddedBatch {
            tokens,
            lengths: seqs.iter().map(|s| s.as_ref().len()).collect(),
            steps,
        })
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn token(&self, b: usize, t: usize) -> usize {
        self.tokens[b * self.steps + t]
    }

    /// Row `b` including its padding.
    pub fn padded_row(&self, b: usize) -> &[usize] {
        &self.tokens[b * self.steps..(b + 1) * self.steps]
    }

    pub fn sequence(&self, b: usize) -> &[usize] {
        &self.padded_row(b)[..self.lengths[b]]
    }

    /// Number of predicted (non-padding) target tokens.
    pub fn target_tokens(&self) -> usize {
        self.lengths.iter().map(|l| l - 1).sum()
    }
}

impl AsRef<[usize]> for TokenSequence {
    fn as_ref(&self) -> &[usize] {
        self.as_slice()
    }
}

/// How the objective is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub kl_weight: f64,
    pub word_dropout: f64,
    /// Monte-Carlo samples `L` of the reconstruction term.
    pub samples: usize,
    /// `false` decodes from `z = mu` (no noise); used for evaluation.
    pub sample_latent: bool,
}

impl LossOptions {
    pub fn training(kl_weight: f64, word_dropout: f64, samples: usize) -> Self {
        LossOptions {
            kl_weight,
            word_dropout,
            samples,
            sample_latent: true,
        }
    }

    /// `z = mu`, no word dropout, full KL weight.
    pub fn evaluation() -> Self {
        LossOptions {
            kl_weight: 1.0,
            word_dropout: 0.0,
            samples: 1,
            sample_latent: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kl_weight) {
            return Err(Error::config(
                "kl_weight",
                format!("{} not in [0, 1]", self.kl_weight),
            ));
        }
        if !(0.0..=1.0).contains(&self.word_dropout) {
            return Err(Error::config(
                "word_dropout",
                format!("{} not in [0, 1]", self.word_dropout),
            ));
        }
        if self.samples == 0 {
            return Err(Error::config("mc_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Loss values of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub per_sequence: Vec<LossBreakdown>,
    /// Mean over the batch.
    pub mean: LossBreakdown,
    /// Predicted tokens in the batch (padding excluded).
    pub tokens: usize,
    /// Targets matched by the argmax of the first sample's logits.
    pub correct: usize,
    /// Summed reconstruction NLL over the batch, for perplexity.
    pub reconstruction_sum: f64,
}

struct SampleTrace<T> {
    eps: Vec<T>,
    z: Vec<T>,
    h0: Vec<T>,
    c0: Vec<T>,
    inputs: Vec<usize>,
    dec: LstmTrace<T>,
    probs: Vec<T>,
}

/// Activations kept for the backward pass.
pub struct ForwardTrace<T> {
    batch: PaddedBatch,
    options: LossOptions,
    enc_fwd: LstmTrace<T>,
    enc_bwd: LstmTrace<T>,
    enc_h: Vec<T>,
    mu: Vec<T>,
    logvar: Vec<T>,
    samples: Vec<SampleTrace<T>>,
}

impl<T: Real> ForwardTrace<T> {
    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn logvar(&self) -> &[T] {
        &self.logvar
    }
}

/// Seed of the random stream used for sample `l` of a sequence seeded with
/// `seed`. The stream draws the `z_dim` noise values first, then one
/// uniform per decoder input after `SOS` when word dropout is active.
pub fn sample_seed(seed: u64, l: usize) -> u64 {
    seed.wrapping_add(l as u64)
}

fn embed_time_major<T: Real>(
    embedding: &Matrix<T>,
    tokens: impl Fn(usize, usize) -> usize,
    steps: usize,
    batch: usize,
    extra: Option<(&[T], usize)>,
) -> Vec<T> {
    let e = embedding.cols();
    let z = extra.map_or(0, |(_, z)| z);
    let width = e + z;
    let mut out = vec![T::zero(); steps * batch * width];
    for t in 0..steps {
        for b in 0..batch {
            let row = &mut out[(t * batch + b) * width..(t * batch + b + 1) * width];
            row[..e].copy_from_slice(embedding.row(tokens(b, t)));
            if let Some((zs, zd)) = extra {
                row[e..].copy_from_slice(&zs[b * zd..(b + 1) * zd]);
            }
        }
    }
    out
}

fn check_tokens<T: Real>(params: &VaeParams<T>, batch: &PaddedBatch) -> Result<()> {
    let v = params.embedding.rows();
    match batch.tokens.iter().find(|&&t| t >= v) {
        Some(&t) => Err(Error::Contract(format!(
            "token index {t} out of range for vocabulary of {v}"
        ))),
        None => Ok(()),
    }
}

struct EncoderOutput<T> {
    fwd: LstmTrace<T>,
    bwd: LstmTrace<T>,
    enc_h: Vec<T>,
    mu: Vec<T>,
    logvar: Vec<T>,
}

fn encoder_forward<T: Real>(params: &VaeParams<T>, batch: &PaddedBatch) -> EncoderOutput<T> {
    let enc = &params.encoder;
    let (bsz, steps) = (batch.size(), batch.steps());
    let h = enc.forward.hidden_size();
    let xs = embed_time_major(
        &params.embedding,
        |b, t| batch.token(b, t),
        steps,
        bsz,
        None,
    );
    let mask: Vec<bool> = (0..steps)
        .flat_map(|t| batch.lengths.iter().map(move |&l| t < l))
        .collect();
    let fwd = enc
        .forward
        .forward_batch(&xs, steps, bsz, &mask, false, None);
    let bwd = enc
        .backward
        .forward_batch(&xs, steps, bsz, &mask, true, None);
    let mut enc_h = vec![T::zero(); bsz * 2 * h];
    for b in 0..bsz {
        enc_h[b * 2 * h..b * 2 * h + h].copy_from_slice(&fwd.final_hidden()[b * h..(b + 1) * h]);
        enc_h[b * 2 * h + h..(b + 1) * 2 * h]
            .copy_from_slice(&bwd.final_hidden()[b * h..(b + 1) * h]);
    }
    let mu = enc.mu.forward_batch(&enc_h, bsz);
    let logvar = enc.logvar.forward_batch(&enc_h, bsz);
    EncoderOutput {
        fwd,
        bwd,
        enc_h,
        mu,
        logvar,
    }
}

/// `(tanh(W_h z + b_h), tanh(W_c z + b_c))` for `batch` latent rows.
fn initial_state<T: Real>(params: &VaeParams<T>, z: &[T], batch: usize) -> (Vec<T>, Vec<T>) {
    let mut h0 = params.decoder.init_h.forward_batch(z, batch);
    let mut c0 = params.decoder.init_c.forward_batch(z, batch);
    h0.iter_mut().for_each(|x| *x = x.tanh());
    c0.iter_mut().for_each(|x| *x = x.tanh());
    (h0, c0)
}

/// Decoder inputs with word dropout applied (`steps − 1` time-major
/// positions; padding stays `PAD`).
fn decoder_inputs(
    batch: &PaddedBatch,
    word_dropout: f64,
    rngs: &mut [Option<ChaCha8Rng>],
) -> Vec<usize> {
    let (bsz, steps) = (batch.size(), batch.steps() - 1);
    let mut inputs = vec![PAD; steps * bsz];
    for b in 0..bsz {
        let live = batch.lengths[b] - 1;
        for t in 0..live {
            let mut tok = batch.token(b, t);
            if t > 0 && word_dropout > 0.0 {
                if let Some(rng) = rngs[b].as_mut() {
                    if rng.gen::<f64>() < word_dropout {
                        tok = UNK;
                    }
                }
            }
            inputs[t * bsz + b] = tok;
        }
    }
    inputs
}

struct DecoderOutput<T> {
    h0: Vec<T>,
    c0: Vec<T>,
    dec: LstmTrace<T>,
    /// `(steps − 1) × batch × V`
    logits: Vec<T>,
}

fn decoder_forward<T: Real>(
    params: &VaeParams<T>,
    z: &[T],
    batch: &PaddedBatch,
    inputs: &[usize],
) -> DecoderOutput<T> {
    let dec = &params.decoder;
    let bsz = batch.size();
    let steps = batch.steps() - 1;
    let zd = z.len() / bsz;
    let (h0, c0) = initial_state(params, z, bsz);
    let xs = embed_time_major(
        &params.embedding,
        |b, t| inputs[t * bsz + b],
        steps,
        bsz,
        Some((z, zd)),
    );
    let mask: Vec<bool> = (0..steps)
        .flat_map(|t| batch.lengths.iter().map(move |&l| t + 1 < l))
        .collect();
    let trace = dec
        .lstm
        .forward_batch(&xs, steps, bsz, &mask, false, Some((&h0, &c0)));
    let logits = dec.output.forward_batch(trace.hidden_states(), steps * bsz);
    DecoderOutput {
        h0,
        c0,
        dec: trace,
        logits,
    }
}

fn argmax<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Evaluates the negated ELBO on a batch. `seeds[b]` keys the random
/// streams of sequence `b` (see [`sample_seed`]).
pub fn forward<T: Real>(
    params: &VaeParams<T>,
    batch: &PaddedBatch,
    options: &LossOptions,
    seeds: &[u64],
) -> Result<(BatchLoss, ForwardTrace<T>)> {
    options.validate()?;
    check_tokens(params, batch)?;
    let bsz = batch.size();
    if seeds.len() != bsz {
        return Err(Error::dim("vae::forward (seeds)", bsz, seeds.len()));
    }
    let v = params.embedding.rows();
    let zd = params.encoder.mu.output_size();
    let enc = encoder_forward(params, batch);

    let mut recon = vec![0.0f64; bsz];
    let mut correct = 0;
    let mut samples = Vec::with_capacity(options.samples);
    let half = T::from_f64(0.5);
    for l in 0..options.samples {
        let mut rngs: Vec<Option<ChaCha8Rng>> = seeds
            .iter()
            .map(|&s| {
                options
                    .sample_latent
                    .then(|| ChaCha8Rng::seed_from_u64(sample_seed(s, l)))
            })
            .collect();
        let mut eps = vec![T::zero(); bsz * zd];
        for (b, rng) in rngs.iter_mut().enumerate() {
            if let Some(rng) = rng {
                for e in &mut eps[b * zd..(b + 1) * zd] {
                    *e = T::from_f64(rng.sample::<f64, _>(StandardNormal));
                }
            }
        }
        let z: Vec<T> = enc
            .mu
            .iter()
            .zip(&enc.logvar)
            .zip(&eps)
            .map(|((&m, &lv), &e)| m + (half * lv).exp() * e)
            .collect();
        let inputs = decoder_inputs(batch, options.word_dropout, &mut rngs);
        let out = decoder_forward(params, &z, batch, &inputs);

        let mut probs = out.logits;
        let steps = batch.steps() - 1;
        for t in 0..steps {
            for b in 0..bsz {
                let row = &mut probs[(t * bsz + b) * v..(t * bsz + b + 1) * v];
                if t + 1 >= batch.lengths[b] {
                    row.fill(T::zero());
                    continue;
                }
                let target = batch.token(b, t + 1);
                if l == 0 && argmax(row) == target {
                    correct += 1;
                }
                let target_logit = row[target];
                let lse = softmax_in_place(row);
                recon[b] += (lse - target_logit).as_f64();
            }
        }
        samples.push(SampleTrace {
            eps,
            z,
            h0: out.h0,
            c0: out.c0,
            inputs,
            dec: out.dec,
            probs,
        });
    }

    let per_sequence: Vec<LossBreakdown> = (0..bsz)
        .map(|b| {
            let kl = kl_terms(
                &enc.mu[b * zd..(b + 1) * zd],
                &enc.logvar[b * zd..(b + 1) * zd],
            );
            LossBreakdown::new(recon[b] / options.samples as f64, kl, options.kl_weight)
        })
        .collect();
    let n = bsz as f64;
    let mean = LossBreakdown::new(
        per_sequence
            .iter()
            .map(|l| l.reconstruction_nll)
            .sum::<f64>()
            / n,
        per_sequence.iter().map(|l| l.kl).sum::<f64>() / n,
        options.kl_weight,
    );
    let loss = BatchLoss {
        reconstruction_sum: per_sequence.iter().map(|l| l.reconstruction_nll).sum(),
        per_sequence,
        mean,
        tokens: batch.target_tokens(),
        correct,
    };
    let trace = ForwardTrace {
        batch: batch.clone(),
        options: *options,
        enc_fwd: enc.fwd,
        enc_bwd: enc.bwd,
        enc_h: enc.enc_h,
        mu: enc.mu,
        logvar: enc.logvar,
        samples,
    };
    Ok((loss, trace))
}

/// Gradient of the batch-mean loss w.r.t. every parameter.
pub fn backward<T: Real>(params: &VaeParams<T>, trace: &ForwardTrace<T>) -> VaeParams<T> {
    let mut grad = params.zeros_like();
    let batch = &trace.batch;
    let bsz = batch.size();
    let dims = params.dims();
    let (v, e, h, zd) = (
        dims.vocab_size,
        dims.embedding_dim,
        dims.hidden_size,
        dims.z_dim,
    );
    let steps = batch.steps() - 1;
    let one = T::one();
    let half = T::from_f64(0.5);
    let scale = T::from_f64(1.0 / (bsz as f64 * trace.options.samples as f64));

    let mut dmu = vec![T::zero(); bsz * zd];
    let mut dlogvar = vec![T::zero(); bsz * zd];

    for s in &trace.samples {
        // Softmax cross-entropy → logits.
        let mut dlogits = s.probs.clone();
        for t in 0..steps {
            for b in 0..bsz {
                let row = &mut dlogits[(t * bsz + b) * v..(t * bsz + b + 1) * v];
                if t + 1 >= batch.lengths[b] {
                    continue;
                }
                row[batch.token(b, t + 1)] -= one;
                row.iter_mut().for_each(|x| *x *= scale);
            }
        }
        let hs = s.dec.hidden_states();
        let mut dh_seq = vec![T::zero(); steps * bsz * h];
        params.decoder.output.backward_batch(
            hs,
            steps * bsz,
            &dlogits,
            &mut grad.decoder.output,
            Some(&mut dh_seq),
        );
        let dx = params.decoder.lstm.backward_batch(
            &s.dec,
            Some(&dh_seq),
            None,
            None,
            &mut grad.decoder.lstm,
        );

        // Split [embedding ∥ z] input gradients.
        let width = e + zd;
        let mut dz = vec![T::zero(); bsz * zd];
        for t in 0..steps {
            for b in 0..bsz {
                let row = &dx.dx[(t * bsz + b) * width..(t * bsz + b + 1) * width];
                let tok = s.inputs[t * bsz + b];
                if t + 1 < batch.lengths[b] {
                    for (g, &d) in grad.embedding.row_mut(tok).iter_mut().zip(&row[..e]) {
                        *g += d;
                    }
                }
                for (g, &d) in dz[b * zd..(b + 1) * zd].iter_mut().zip(&row[e..]) {
                    *g += d;
                }
            }
        }

        // Initial-state heads: h₀ = tanh(·), c₀ = tanh(·).
        let dpre_h: Vec<T> = dx
            .dh0
            .iter()
            .zip(&s.h0)
            .map(|(&d, &y)| d * (one - y * y))
            .collect();
        let dpre_c: Vec<T> = dx
            .dc0
            .iter()
            .zip(&s.c0)
            .map(|(&d, &y)| d * (one - y * y))
            .collect();
        let mut dz_h = vec![T::zero(); bsz * zd];
        let mut dz_c = vec![T::zero(); bsz * zd];
        params.decoder.init_h.backward_batch(
            &s.z,
            bsz,
            &dpre_h,
            &mut grad.decoder.init_h,
            Some(&mut dz_h),
        );
        params.decoder.init_c.backward_batch(
            &s.z,
            bsz,
            &dpre_c,
            &mut grad.decoder.init_c,
            Some(&mut dz_c),
        );

        // z = mu + exp(½ logvar) ⊙ eps
        for k in 0..bsz * zd {
            let g = dz[k] + dz_h[k] + dz_c[k];
            dmu[k] += g;
            dlogvar[k] += g * s.eps[k] * half * (half * trace.logvar[k]).exp();
        }
    }

    // KL term, weighted and averaged over the batch.
    let kl_scale = T::from_f64(trace.options.kl_weight / bsz as f64);
    for k in 0..bsz * zd {
        dmu[k] += kl_scale * trace.mu[k];
        dlogvar[k] += kl_scale * half * (trace.logvar[k].exp() - one);
    }

    let mut denc = vec![T::zero(); bsz * 2 * h];
    let mut tmp = vec![T::zero(); bsz * 2 * h];
    params.encoder.mu.backward_batch(
        &trace.enc_h,
        bsz,
        &dmu,
        &mut grad.encoder.mu,
        Some(&mut denc),
    );
    params.encoder.logvar.backward_batch(
        &trace.enc_h,
        bsz,
        &dlogvar,
        &mut grad.encoder.logvar,
        Some(&mut tmp),
    );
    for (a, &b) in denc.iter_mut().zip(&tmp) {
        *a += b;
    }
    let mut dh_f = vec![T::zero(); bsz * h];
    let mut dh_b = vec![T::zero(); bsz * h];
    for b in 0..bsz {
        dh_f[b * h..(b + 1) * h].copy_from_slice(&denc[b * 2 * h..b * 2 * h + h]);
        dh_b[b * h..(b + 1) * h].copy_from_slice(&denc[b * 2 * h + h..(b + 1) * 2 * h]);
    }
    let gf = params.encoder.forward.backward_batch(
        &trace.enc_fwd,
        None,
        Some(&dh_f),
        None,
        &mut grad.encoder.forward,
    );
    let gb = params.encoder.backward.backward_batch(
        &trace.enc_bwd,
        None,
        Some(&dh_b),
        None,
        &mut grad.encoder.backward,
    );
    let enc_steps = batch.steps();
    for t in 0..enc_steps {
        for b in 0..bsz {
            if t >= batch.lengths[b] {
                continue;
            }
            let k = (t * bsz + b) * e;
            let row = grad.embedding.row_mut(batch.token(b, t));
            for (j, r) in row.iter_mut().enumerate() {
                *r += gf.dx[k + j] + gb.dx[k + j];
            }
        }
    }
    grad
}

/// Loss and gradient of a batch in one call.
pub fn loss_and_gradient<T: Real>(
    params: &VaeParams<T>,
    batch: &PaddedBatch,
    options: &LossOptions,
    seeds: &[u64],
) -> Result<(BatchLoss, VaeParams<T>)> {
    let (loss, trace) = forward(params, batch, options, seeds)?;
    let grad = backward(params, &trace);
    Ok((loss, grad))
}

fn single(x: &TokenSequence) -> Result<PaddedBatch> {
    PaddedBatch::new(std::slice::from_ref(x))
}

/// Posterior parameters `(mu, logvar)` of one sentence.
pub fn encode<T: Real>(params: &VaeParams<T>, x: &TokenSequence) -> Result<(Vec<T>, Vec<T>)> {
    let batch = single(x)?;
    check_tokens(params, &batch)?;
    let out = encoder_forward(params, &batch);
    Ok((out.mu, out.logvar))
}

/// Teacher-forced decoder logits, one row per prediction (`|x| − 1 × V`).
/// Non-`SOS` inputs are replaced by `UNK` with probability `word_dropout`
/// using a generator seeded with `seed`.
pub fn decode<T: Real>(
    params: &VaeParams<T>,
    z: &LatentCode<T>,
    x: &TokenSequence,
    word_dropout: f64,
    seed: u64,
) -> Result<Matrix<T>> {
    let batch = single(x)?;
    check_tokens(params, &batch)?;
    let zd = params.encoder.mu.output_size();
    if z.dim() != zd {
        return Err(Error::dim("vae::decode (z)", zd, z.dim()));
    }
    let mut rngs = vec![Some(ChaCha8Rng::seed_from_u64(seed))];
    let inputs = decoder_inputs(&batch, word_dropout, &mut rngs);
    let out = decoder_forward(params, z.as_slice(), &batch, &inputs);
    Matrix::from_vec(x.len() - 1, params.embedding.rows(), out.logits)
}

/// Negated ELBO of one sentence.
pub fn elbo_loss<T: Real>(
    params: &VaeParams<T>,
    x: &TokenSequence,
    options: &LossOptions,
    seed: u64,
) -> Result<LossBreakdown> {
    let (loss, _) = forward(params, &single(x)?, options, &[seed])?;
    Ok(loss.per_sequence[0])
}

/// Single-sequence autoregressive decoder used for generation.
pub struct DecoderState<'a, T> {
    params: &'a VaeParams<T>,
    z: Vec<T>,
    h: Vec<T>,
    c: Vec<T>,
}

impl<'a, T: Real> DecoderState<'a, T> {
    pub fn new(params: &'a VaeParams<T>, z: &LatentCode<T>) -> Result<Self> {
        let zd = params.encoder.mu.output_size();
        if z.dim() != zd {
            return Err(Error::dim("DecoderState (z)", zd, z.dim()));
        }
        let (h, c) = initial_state(params, z.as_slice(), 1);
        Ok(DecoderState {
            params,
            z: z.0.clone(),
            h,
            c,
        })
    }

    /// Consumes `[embedding(token) ∥ z]` and returns next-token logits.
    pub fn step(&mut self, token: usize) -> Result<Vec<T>> {
        let v = self.params.embedding.rows();
        if token >= v {
            return Err(Error::Contract(format!(
                "token {token} out of range for {v}"
            )));
        }
        let mut x = self.params.embedding.row(token).to_vec();
        x.extend_from_slice(&self.z);
        let trace = self.params.decoder.lstm.forward_batch(
            &x,
            1,
            1,
            &[true],
            false,
            Some((&self.h, &self.c)),
        );
        self.h.copy_from_slice(trace.final_hidden());
        self.c.copy_from_slice(trace.final_cell());
        Ok(self.params.decoder.output.forward_batch(&self.h, 1))
    }
}
