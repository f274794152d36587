//! Minibatch training with KL annealing and word dropout, evaluation, and
//! checkpointing.
//!
//! Every random choice is derived from `TrainingConfig::seed`: parameter
//! initialization, the per-epoch shuffle, and the per-sequence noise of each
//! step. Resuming from a checkpoint therefore replays exactly the steps an
//! uninterrupted run would have taken.

mod checkpoint;
mod config;
mod metrics;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, save_checkpoint, AnyCheckpoint, Checkpoint, FORMAT_VERSION};
pub use config::{Precision, TrainingConfig};
pub use metrics::{EpochRecord, Metrics, MetricsAccumulator};

use crate::corpus::RequirementsCorpus;
use crate::error::{Error, Result};
use crate::nn::{adam_step, clip_global_norm};
use crate::real::Real;
use crate::tokenizer::{TokenSequence, Vocabulary};
use crate::vae::{self, LossOptions, PaddedBatch, VaeParams, TENSOR_NAMES};

const STREAM_INIT: u64 = 1;
const STREAM_EMBEDDING: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_STEP: u64 = 4;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent seed for `(stream, index)` under a run seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

pub(crate) fn init_seed(seed: u64) -> u64 {
    derive_seed(seed, STREAM_INIT, 0)
}

/// Seed for the random initialization of embedding rows without a
/// pretrained vector.
pub fn embedding_seed(seed: u64) -> u64 {
    derive_seed(seed, STREAM_EMBEDDING, 0)
}

fn step_seeds(seed: u64, step: u64, n: usize) -> Vec<u64> {
    let base = derive_seed(seed, STREAM_STEP, step);
    (0..n as u64).map(|b| splitmix(base ^ b)).collect()
}

/// Linear KL annealing: `min(1, step / warmup)`. A warmup of 0 disables
/// annealing and keeps the weight at 1.
pub fn kl_weight_at(step: u64, warmup: u64) -> f64 {
    if warmup == 0 || step >= warmup {
        1.0
    } else {
        step as f64 / warmup as f64
    }
}

/// Sequence indices of each batch for one epoch, in a shuffled order keyed
/// by `(seed, epoch)`. The last batch holds the remainder.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SHUFFLE, epoch as u64));
    order.shuffle(&mut rng);
    order
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

pub fn make_batches(
    sequences: &[TokenSequence],
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<PaddedBatch>> {
    if sequences.is_empty() {
        return Err(Error::Contract("cannot batch an empty dataset".into()));
    }
    batch_indices(sequences.len(), batch_size, seed, epoch)
        .iter()
        .map(|idx| {
            let seqs: Vec<&TokenSequence> = idx.iter().map(|&i| &sequences[i]).collect();
            PaddedBatch::new(&seqs)
        })
        .collect()
}

/// Encodes every entry with `vocab`.
pub fn encode_corpus(vocab: &Vocabulary, corpus: &RequirementsCorpus) -> Vec<TokenSequence> {
    corpus.entries.iter().map(|e| vocab.encode(e)).collect()
}

/// Loss values of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub batch: usize,
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    pub kl_weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

/// Where training writes its side outputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOutputs<'a> {
    /// Line-delimited JSON, one record per epoch. Appended to when resuming.
    pub metrics_log: Option<&'a Path>,
    /// Rewritten atomically after every `checkpoint_every` epochs and at the end.
    pub checkpoint: Option<&'a Path>,
    pub checkpoint_every: usize,
}

/// Trains until `checkpoint.epoch == checkpoint.config.epochs`, continuing
/// from whatever state the checkpoint holds.
pub fn train<T: Real>(
    checkpoint: &mut Checkpoint<T>,
    sequences: &[TokenSequence],
    outputs: &TrainOutputs,
) -> Result<TrainReport> {
    let config = checkpoint.config.clone();
    config.validate()?;
    if sequences.is_empty() {
        return Err(Error::Contract("training corpus is empty".into()));
    }
    let mut log = match outputs.metrics_log {
        Some(path) => {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .write(true)
                .append(checkpoint.epoch > 0)
                .truncate(checkpoint.epoch == 0)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            Some((path, std::io::BufWriter::new(file)))
        }
        None => None,
    };
    let adam = config.adam();
    let started = Instant::now();
    let time_offset = checkpoint.history.last().map_or(0.0, |r| r.wall_time_s);
    let mut report = TrainReport::default();

    while checkpoint.epoch < config.epochs {
        let epoch = checkpoint.epoch;
        let mut acc = MetricsAccumulator::default();
        for (b, batch) in make_batches(sequences, config.batch_size, config.seed, epoch)?
            .iter()
            .enumerate()
        {
            let step = checkpoint.step;
            let kl_weight = kl_weight_at(step, config.kl_warmup_steps);
            let options = LossOptions::training(kl_weight, config.word_dropout, config.mc_samples);
            let seeds = step_seeds(config.seed, step, batch.size());
            let (loss, mut grad) =
                vae::loss_and_gradient(&checkpoint.params, batch, &options, &seeds)?;
            if !loss.mean.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step,
                    epoch,
                    batch: b,
                });
            }
            if config.freeze_embeddings {
                grad.embedding.fill(T::zero());
            }
            apply_update(
                &mut checkpoint.params,
                &mut grad,
                &mut checkpoint.adam,
                &adam,
                config.clip_norm,
            )?;
            checkpoint.step += 1;
            report.steps.push(StepRecord {
                step,
                epoch,
                batch: b,
                total: loss.mean.total,
                recon: loss.mean.reconstruction_nll,
                kl: loss.mean.kl,
                kl_weight,
            });
            acc.add(&loss);
        }
        checkpoint.epoch += 1;
        let record = EpochRecord {
            epoch,
            step: checkpoint.step,
            metrics: acc.finish(),
            wall_time_s: time_offset + started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {} step {}: total {:.4} recon {:.4} kl {:.4} (weight {:.3}) acc {:.4} ppl {:.3}",
            epoch,
            record.step,
            record.metrics.total,
            record.metrics.recon,
            record.metrics.kl,
            record.metrics.kl_weight,
            record.metrics.accuracy,
            record.metrics.perplexity
        );
        checkpoint.history.push(record);
        report.epochs.push(record);
        if let Some((path, w)) = log.as_mut() {
            let line =
                serde_json::to_string(&record).map_err(|e| Error::Checkpoint(e.to_string()))?;
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(*path, e))?;
        }
        if let Some(path) = outputs.checkpoint {
            let every = outputs.checkpoint_every.max(1);
            if checkpoint.epoch.is_multiple_of(every) || checkpoint.epoch == config.epochs {
                save_checkpoint(checkpoint, path)?;
            }
        }
    }
    Ok(report)
}

fn apply_update<T: Real>(
    params: &mut VaeParams<T>,
    grad: &mut VaeParams<T>,
    state: &mut crate::nn::AdamState<T>,
    adam: &crate::nn::AdamConfig,
    clip_norm: f64,
) -> Result<()> {
    if clip_norm > 0.0 {
        clip_global_norm(&mut grad.tensors_mut(), clip_norm);
    }
    adam_step(
        &mut params.tensors_mut(),
        &grad.tensors(),
        &TENSOR_NAMES,
        state,
        adam,
    )
}

/// Metrics with `z = mu`, no word dropout and full KL weight. Parameters are
/// not modified.
pub fn evaluate_sequences<T: Real>(
    params: &VaeParams<T>,
    sequences: &[TokenSequence],
    batch_size: usize,
) -> Result<Metrics> {
    if sequences.is_empty() {
        return Err(Error::Contract("evaluation corpus is empty".into()));
    }
    let options = LossOptions::evaluation();
    let mut acc = MetricsAccumulator::default();
    for chunk in sequences.chunks(batch_size.max(1)) {
        let batch = PaddedBatch::new(chunk)?;
        let seeds = vec![0; chunk.len()];
        let (loss, _) = vae::forward(params, &batch, &options, &seeds)?;
        acc.add(&loss);
    }
    Ok(acc.finish())
}

/// Encodes `corpus` with the checkpoint's vocabulary and evaluates it.
pub fn evaluate<T: Real>(
    checkpoint: &Checkpoint<T>,
    corpus: &RequirementsCorpus,
) -> Result<Metrics> {
    let sequences = encode_corpus(&checkpoint.vocab, corpus);
    evaluate_sequences(&checkpoint.params, &sequences, checkpoint.config.batch_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_schedule_examples() {
        assert_eq!(kl_weight_at(0, 2000), 0.0);
        assert_eq!(kl_weight_at(1000, 2000), 0.5);
        assert_eq!(kl_weight_at(2000, 2000), 1.0);
        assert_eq!(kl_weight_at(9000, 2000), 1.0);
        assert_eq!(kl_weight_at(0, 0), 1.0);
    }

    proptest! {
        #[test]
        fn kl_schedule_monotone(a in 0u64..10_000, b in 0u64..10_000, w in 1u64..5000) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(kl_weight_at(lo, w) <= kl_weight_at(hi, w));
            prop_assert!((0.0..=1.0).contains(&kl_weight_at(a, w)));
            prop_assert_eq!(kl_weight_at(w, w), 1.0);
        }

        #[test]
        fn batches_partition_the_dataset(n in 1usize..80, bs in 1usize..20, seed: u64, epoch in 0usize..5) {
            let batches = batch_indices(n, bs, seed, epoch);
            let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(batches[..batches.len() - 1].iter().all(|b| b.len() == bs));
        }
    }

    #[test]
    fn ten_sequences_in_batches_of_four() {
        let seqs: Vec<TokenSequence> = (0..10)
            .map(|i| TokenSequence(vec![1, 4 + i % 3, 2]))
            .collect();
        let sizes: Vec<usize> = make_batches(&seqs, 4, 0, 0)
            .unwrap()
            .iter()
            .map(|b| b.size())
            .collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(batch_indices(10, 4, 5, 3), batch_indices(10, 4, 5, 3));
        assert_ne!(batch_indices(10, 4, 5, 3), batch_indices(10, 4, 5, 4));
        assert!(make_batches(&[], 4, 0, 0).is_err());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let s = step_seeds(0, 0, 4);
        let t = step_seeds(0, 1, 4);
        let mut all: Vec<u64> = s.iter().chain(&t).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 8);
    }
}
