use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Dense, LstmParams, Matrix};
use crate::real::Real;

/// Layer sizes of the sentence VAE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeDims {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub z_dim: usize,
}

/// Bidirectional LSTM over the embedded sentence plus the two Gaussian
/// posterior heads reading the concatenated final states (`2h → z`).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    pub forward: LstmParams<T>,
    pub backward: LstmParams<T>,
    pub mu: Dense<T>,
    pub logvar: Dense<T>,
}

/// LSTM fed `[embedding ∥ z]` each step, the `z → (h₀, c₀)` heads, and the
/// vocabulary projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams<T> {
    pub lstm: LstmParams<T>,
    pub init_h: Dense<T>,
    pub init_c: Dense<T>,
    pub output: Dense<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams<T> {
    /// `V × embedding_dim`
    pub embedding: Matrix<T>,
    pub encoder: EncoderParams<T>,
    pub decoder: DecoderParams<T>,
}

impl<T: Real> VaeParams<T> {
    /// Random weights U(−1/√h, 1/√h) around a prepared embedding matrix.
    pub fn init(embedding: Matrix<T>, hidden_size: usize, z_dim: usize, seed: u64) -> Self {
        let (v, e) = embedding.shape();
        let h = hidden_size;
        let k = 1.0 / (h as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderParams {
            forward: LstmParams::uniform(e, h, &mut rng),
            backward: LstmParams::uniform(e, h, &mut rng),
            mu: Dense::uniform(2 * h, z_dim, k, &mut rng),
            logvar: Dense::uniform(2 * h, z_dim, k, &mut rng),
        };
        let decoder = DecoderParams {
            lstm: LstmParams::uniform(e + z_dim, h, &mut rng),
            init_h: Dense::uniform(z_dim, h, k, &mut rng),
            init_c: Dense::uniform(z_dim, h, k, &mut rng),
            output: Dense::uniform(h, v, k, &mut rng),
        };
        VaeParams {
            embedding,
            encoder,
            decoder,
        }
    }

    pub fn zeros(dims: VaeDims) -> Self {
        let VaeDims {
            vocab_size: v,
            embedding_dim: e,
            hidden_size: h,
            z_dim: z,
        } = dims;
        VaeParams {
            embedding: Matrix::zeros(v, e),
            encoder: EncoderParams {
                forward: LstmParams::zeros(e, h),
                backward: LstmParams::zeros(e, h),
                mu: Dense::zeros(2 * h, z),
                logvar: Dense::zeros(2 * h, z),
            },
            decoder: DecoderParams {
                lstm: LstmParams::zeros(e + z, h),
                init_h: Dense::zeros(z, h),
                init_c: Dense::zeros(z, h),
                output: Dense::zeros(h, v),
            },
        }
    }

    pub fn dims(&self) -> VaeDims {
        VaeDims {
            vocab_size: self.embedding.rows(),
            embedding_dim: self.embedding.cols(),
            hidden_size: self.encoder.forward.hidden_size(),
            z_dim: self.encoder.mu.output_size(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims())
    }

    /// Checks every tensor against the shapes implied by `dims()`.
    pub fn validate(&self) -> Result<()> {
        let expected = Self::zeros(self.dims());
        for ((name, a), (_, b)) in self.named_shapes().into_iter().zip(expected.named_shapes()) {
            if a != b {
                return Err(Error::dim(name, format!("{b:?}"), format!("{a:?}")));
            }
        }
        Ok(())
    }

    /// Tensor names and `(rows, cols)` in canonical order.
    pub fn named_shapes(&self) -> Vec<(&'static str, (usize, usize))> {
        fn lstm<T: Real>(p: &LstmParams<T>) -> [(usize, usize); 3] {
            [p.w.shape(), p.u.shape(), (1, p.b.len())]
        }
        fn dense<T: Real>(d: &Dense<T>) -> [(usize, usize); 2] {
            [d.weight.shape(), (1, d.bias.len())]
        }
        let shapes = std::iter::once(self.embedding.shape())
            .chain(lstm(&self.encoder.forward))
            .chain(lstm(&self.encoder.backward))
            .chain(dense(&self.encoder.mu))
            .chain(dense(&self.encoder.logvar))
            .chain(lstm(&self.decoder.lstm))
            .chain(dense(&self.decoder.init_h))
            .chain(dense(&self.decoder.init_c))
            .chain(dense(&self.decoder.output));
        TENSOR_NAMES.iter().copied().zip(shapes).collect()
    }

    /// Every tensor as a flat slice, canonical order.
    pub fn tensors(&self) -> Vec<&[T]> {
        let e = &self.encoder;
        let d = &self.decoder;
        vec![
            self.embedding.as_slice(),
            e.forward.w.as_slice(),
            e.forward.u.as_slice(),
            &e.forward.b,
            e.backward.w.as_slice(),
            e.backward.u.as_slice(),
            &e.backward.b,
            e.mu.weight.as_slice(),
            &e.mu.bias,
            e.logvar.weight.as_slice(),
            &e.logvar.bias,
            d.lstm.w.as_slice(),
            d.lstm.u.as_slice(),
            &d.lstm.b,
            d.init_h.weight.as_slice(),
            &d.init_h.bias,
            d.init_c.weight.as_slice(),
            &d.init_c.bias,
            d.output.weight.as_slice(),
            &d.output.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let VaeParams {
            embedding,
            encoder: e,
            decoder: d,
        } = self;
        vec![
            embedding.as_mut_slice(),
            e.forward.w.as_mut_slice(),
            e.forward.u.as_mut_slice(),
            &mut e.forward.b,
            e.backward.w.as_mut_slice(),
            e.backward.u.as_mut_slice(),
            &mut e.backward.b,
            e.mu.weight.as_mut_slice(),
            &mut e.mu.bias,
            e.logvar.weight.as_mut_slice(),
            &mut e.logvar.bias,
            d.lstm.w.as_mut_slice(),
            d.lstm.u.as_mut_slice(),
            &mut d.lstm.b,
            d.init_h.weight.as_mut_slice(),
            &mut d.init_h.bias,
            d.init_c.weight.as_mut_slice(),
            &mut d.init_c.bias,
            d.output.weight.as_mut_slice(),
            &mut d.output.bias,
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.tensors().concat()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        let total = self.num_parameters();
        if flat.len() != total {
            return Err(Error::dim("VaeParams::assign_flat", total, flat.len()));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> VaeParams<U> {
        let mut out = VaeParams::<U>::zeros(self.dims());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = U::from_f64(s.as_f64());
            }
        }
        out
    }

    /// Accumulates `other` into `self` tensor by tensor.
    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }
}

pub const TENSOR_NAMES: [&str; 20] = [
    "embedding",
    "encoder.forward.w",
    "encoder.forward.u",
    "encoder.forward.b",
    "encoder.backward.w",
    "encoder.backward.u",
    "encoder.backward.b",
    "encoder.mu.weight",
    "encoder.mu.bias",
    "encoder.logvar.weight",
    "encoder.logvar.bias",
    "decoder.lstm.w",
    "decoder.lstm.u",
    "decoder.lstm.b",
    "decoder.init_h.weight",
    "decoder.init_h.bias",
    "decoder.init_c.weight",
    "decoder.init_c.bias",
    "decoder.output.weight",
    "decoder.output.bias",
];
