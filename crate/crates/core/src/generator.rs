//! Text generation from a trained model: decoding arbitrary latent codes,
//! reconstruction, prior sampling and latent-space interpolation.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tokenizer::{TokenSequence, EOS, SOS};
use crate::trainer::Checkpoint;
use crate::vae::{self, DecoderState, LatentCode, VaeParams};

pub const DEFAULT_MAX_LEN: usize = 25;
pub const DEFAULT_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMode {
    Sample,
    Reconstruct,
    Interpolate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationRequest {
    pub mode: GenerationMode,
    /// 0 decodes greedily.
    pub temperature: f64,
    pub max_len: usize,
    /// Interpolation points, endpoints included.
    pub steps: usize,
    pub seed: u64,
}

impl GenerationRequest {
    pub fn new(mode: GenerationMode) -> Self {
        GenerationRequest {
            mode,
            temperature: 0.0,
            max_len: DEFAULT_MAX_LEN,
            steps: DEFAULT_STEPS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::config(
                "temperature",
                format!("{} is negative", self.temperature),
            ));
        }
        if self.max_len == 0 {
            return Err(Error::config("max_len", "must be at least 1"));
        }
        if self.mode == GenerationMode::Interpolate && self.steps < 2 {
            return Err(Error::config("steps", format!("{} < 2", self.steps)));
        }
        Ok(())
    }
}

/// Index of the largest value; ties go to the lowest index.
fn argmax<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Autoregressive decoding from `SOS`. Temperature 0 takes the argmax at
/// every step; otherwise tokens are drawn from `softmax(logits / t)` with a
/// generator seeded by `seed`. The result holds the generated tokens only
/// (no `SOS`) and ends with `EOS` unless it reached `max_len` first.
pub fn greedy_decode<T: Real>(
    z: &LatentCode<T>,
    params: &VaeParams<T>,
    max_len: usize,
    temperature: f64,
    seed: u64,
) -> Result<TokenSequence> {
    let mut state = DecoderState::new(params, z)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(max_len);
    let mut token = SOS;
    while out.len() < max_len {
        let logits = state.step(token)?;
        token = if temperature == 0.0 {
            argmax(&logits)
        } else {
            sample_scaled(&logits, temperature, &mut rng)?
        };
        out.push(token);
        if token == EOS {
            break;
        }
    }
    Ok(TokenSequence(out))
}

fn sample_scaled<T: Real>(logits: &[T], temperature: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    let max = logits[argmax(logits)].as_f64();
    let weights: Vec<f64> = logits
        .iter()
        .map(|&l| ((l.as_f64() - max) / temperature).exp())
        .collect();
    let dist =
        WeightedIndex::new(&weights).map_err(|_| Error::NumericOverflow("temperature sampling"))?;
    Ok(dist.sample(rng))
}

/// Posterior mean of `sentence` under the checkpoint's vocabulary.
pub fn posterior_mean<T: Real>(
    sentence: &str,
    checkpoint: &Checkpoint<T>,
) -> Result<LatentCode<T>> {
    let (mu, _) = vae::encode(&checkpoint.params, &checkpoint.vocab.encode(sentence))?;
    Ok(LatentCode(mu))
}

/// Greedy decode of `z` rendered as text.
pub fn decode_text<T: Real>(
    z: &LatentCode<T>,
    checkpoint: &Checkpoint<T>,
    max_len: usize,
) -> Result<String> {
    checkpoint
        .vocab
        .decode(&greedy_decode(z, &checkpoint.params, max_len, 0.0, 0)?)
}

/// Encodes to the posterior mean and decodes greedily.
pub fn reconstruct<T: Real>(
    sentence: &str,
    checkpoint: &Checkpoint<T>,
    max_len: usize,
) -> Result<String> {
    decode_text(&posterior_mean(sentence, checkpoint)?, checkpoint, max_len)
}

/// `n` sentences decoded from independent standard-normal draws.
pub fn sample_prior<T: Real>(
    n: usize,
    checkpoint: &Checkpoint<T>,
    max_len: usize,
    temperature: f64,
    seed: u64,
) -> Result<Vec<String>> {
    let z_dim = checkpoint.dims().z_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let z: Vec<T> = (0..z_dim)
                .map(|_| T::from_f64(StandardNormal.sample(&mut rng)))
                .collect();
            let tokens = greedy_decode(
                &LatentCode(z),
                &checkpoint.params,
                max_len,
                temperature,
                seed.wrapping_add(k as u64 + 1),
            )?;
            checkpoint.vocab.decode(&tokens)
        })
        .collect()
}

/// Mixing weights `k / (steps − 1)` for `k = 0 … steps − 1`.
pub fn interpolation_alphas(steps: usize) -> Vec<f64> {
    let last = (steps.max(2) - 1) as f64;
    (0..steps).map(|k| k as f64 / last).collect()
}

/// Greedy decodes along the line between the posterior means of two
/// sentences, paired with their mixing weight.
pub fn interpolate<T: Real>(
    sentence_a: &str,
    sentence_b: &str,
    checkpoint: &Checkpoint<T>,
    steps: usize,
    max_len: usize,
) -> Result<Vec<(f64, String)>> {
    if steps < 2 {
        return Err(Error::config("steps", format!("{steps} < 2")));
    }
    let za = posterior_mean(sentence_a, checkpoint)?;
    let zb = posterior_mean(sentence_b, checkpoint)?;
    interpolation_alphas(steps)
        .into_iter()
        .map(|alpha| {
            let z = LatentCode::lerp(&za, &zb, T::from_f64(alpha));
            Ok((alpha, decode_text(&z, checkpoint, max_len)?))
        })
        .collect()
}

/// `alpha=<value><TAB><sentence>` lines.
pub fn format_interpolation(rows: &[(f64, String)]) -> String {
    rows.iter()
        .map(|(alpha, s)| format!("alpha={alpha:.3}\t{s}\n"))
        .collect()
}
