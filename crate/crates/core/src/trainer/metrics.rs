use serde::{Deserialize, Serialize};

use crate::vae::BatchLoss;

/// Aggregate objective and reconstruction quality over a set of sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    pub kl_weight: f64,
    pub accuracy: f64,
    pub perplexity: f64,
}

/// One line of the metrics log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub step: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub wall_time_s: f64,
}

/// Running sums from which [`Metrics`] are derived.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    sequences: usize,
    total: f64,
    recon: f64,
    kl: f64,
    recon_sum: f64,
    tokens: usize,
    correct: usize,
    kl_weight: f64,
}

impl MetricsAccumulator {
    pub fn add(&mut self, loss: &BatchLoss) {
        for s in &loss.per_sequence {
            self.total += s.total;
            self.recon += s.reconstruction_nll;
            self.kl += s.kl;
        }
        self.sequences += loss.per_sequence.len();
        self.recon_sum += loss.reconstruction_sum;
        self.tokens += loss.tokens;
        self.correct += loss.correct;
        self.kl_weight = loss.mean.kl_weight;
    }

    pub fn finish(&self) -> Metrics {
        let n = self.sequences.max(1) as f64;
        let tokens = self.tokens.max(1) as f64;
        Metrics {
            total: self.total / n,
            recon: self.recon / n,
            kl: self.kl / n,
            kl_weight: self.kl_weight,
            accuracy: self.correct as f64 / tokens,
            perplexity: (self.recon_sum / tokens).exp(),
        }
    }
}
