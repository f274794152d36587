//! Single-file binary checkpoint. All integers and scalars are little-endian.
//!
//! ```text
//! magic      8 bytes   "RQVAECKP"
//! version    u32
//! scalar     u8        bytes per parameter value (4 or 8)
//! step       u64       optimizer steps taken
//! epoch      u64       completed epochs
//! config     u64 length + UTF-8 JSON
//! vocabulary u64 length + UTF-8 "index<TAB>word<TAB>count" lines
//! history    u64 length + UTF-8 JSON array of epoch records
//! tensors    u32 count, then per tensor:
//!              u16 name length, name, u32 rows, u32 cols, rows·cols values
//! adam       u64 t, then m and v for every tensor in order
//! end        8 bytes   "RQVAEEND"
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::nn::{AdamState, Matrix};
use crate::real::Real;
use crate::tokenizer::Vocabulary;
use crate::vae::{VaeDims, VaeParams};

use super::config::{Precision, TrainingConfig};
use super::metrics::EpochRecord;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"RQVAECKP";
const END: &[u8; 8] = b"RQVAEEND";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub config: TrainingConfig,
    pub vocab: Vocabulary,
    pub params: VaeParams<T>,
    pub adam: AdamState<T>,
    pub step: u64,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl<T: Real> Checkpoint<T> {
    /// Fresh, untrained state with parameters drawn from `config.seed`.
    pub fn initialize(
        config: TrainingConfig,
        vocab: Vocabulary,
        embedding: Matrix<T>,
    ) -> Result<Self> {
        config.validate()?;
        if T::BYTES != config.precision.bytes() {
            return Err(Error::config(
                "precision",
                format!(
                    "{} does not match a {}-byte scalar",
                    config.precision,
                    T::BYTES
                ),
            ));
        }
        if embedding.rows() != vocab.len() {
            return Err(Error::dim(
                "Checkpoint::initialize (embedding rows)",
                vocab.len(),
                embedding.rows(),
            ));
        }
        if embedding.cols() != config.embedding_dim {
            return Err(Error::config(
                "embedding_dim",
                format!(
                    "{} but the embedding matrix has {} columns",
                    config.embedding_dim,
                    embedding.cols()
                ),
            ));
        }
        let params = VaeParams::init(
            embedding,
            config.hidden_size,
            config.z_dim,
            super::init_seed(config.seed),
        );
        let adam = AdamState::new(params.tensors().iter().map(|t| t.len()));
        Ok(Checkpoint {
            config,
            vocab,
            params,
            adam,
            step: 0,
            epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn dims(&self) -> VaeDims {
        self.params.dims()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(T::BYTES as u8);
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&(self.epoch as u64).to_le_bytes());
        for block in [
            to_json(&self.config)?,
            self.vocab.to_text(),
            to_json(&self.history)?,
        ] {
            out.extend_from_slice(&(block.len() as u64).to_le_bytes());
            out.extend_from_slice(block.as_bytes());
        }
        let shapes = self.params.named_shapes();
        out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
        for ((name, (rows, cols)), data) in shapes.iter().zip(self.params.tensors()) {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(*rows as u32).to_le_bytes());
            out.extend_from_slice(&(*cols as u32).to_le_bytes());
            data.iter().for_each(|&x| x.write_le(&mut out));
        }
        out.extend_from_slice(&self.adam.t.to_le_bytes());
        for buf in self.adam.m.iter().chain(&self.adam.v) {
            buf.iter().for_each(|&x| x.write_le(&mut out));
        }
        out.extend_from_slice(END);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint(
                "not a checkpoint file (bad magic)".into(),
            ));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }
        let width = r.take(1)?[0] as usize;
        if width != T::BYTES {
            return Err(Error::Checkpoint(format!(
                "stored {width}-byte scalars, requested {}-byte",
                T::BYTES
            )));
        }
        let step = r.u64()?;
        let epoch = r.u64()? as usize;
        let config: TrainingConfig = serde_json::from_str(r.block()?)
            .map_err(|e| Error::Checkpoint(format!("config block: {e}")))?;
        let vocab = Vocabulary::from_text(r.block()?, config.num_words)?;
        let history: Vec<EpochRecord> = serde_json::from_str(r.block()?)
            .map_err(|e| Error::Checkpoint(format!("history block: {e}")))?;

        let dims = VaeDims {
            vocab_size: vocab.len(),
            embedding_dim: config.embedding_dim,
            hidden_size: config.hidden_size,
            z_dim: config.z_dim,
        };
        let mut params = VaeParams::<T>::zeros(dims);
        let expected = params.named_shapes();
        let count = r.u32()? as usize;
        if count != expected.len() {
            return Err(Error::Checkpoint(format!(
                "{count} tensors, expected {}",
                expected.len()
            )));
        }
        for ((name, shape), dst) in expected.iter().zip(params.tensors_mut()) {
            let len = r.u16()? as usize;
            let stored = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if stored != *name || (rows, cols) != *shape {
                return Err(Error::Checkpoint(format!(
                    "tensor `{stored}` {rows}×{cols} where `{name}` {}×{} was expected",
                    shape.0, shape.1
                )));
            }
            r.values(dst)?;
        }
        let mut adam = AdamState::<T>::new(expected.iter().map(|(_, (r, c))| r * c));
        adam.t = r.u64()?;
        for buf in adam.m.iter_mut().chain(adam.v.iter_mut()) {
            r.values(buf)?;
        }
        if r.take(8)? != END {
            return Err(Error::Checkpoint("missing end marker".into()));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            config,
            vocab,
            params,
            adam,
            step,
            epoch,
            history,
        })
    }
}

fn to_json<S: serde::Serialize>(value: &S) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Checkpoint(e.to_string()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "truncated file: needed {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn block(&mut self) -> Result<&'a str> {
        let len = usize::try_from(self.u64()?)
            .map_err(|_| Error::Checkpoint("block too large".into()))?;
        std::str::from_utf8(self.take(len)?)
            .map_err(|_| Error::Checkpoint("text block is not UTF-8".into()))
    }

    fn values<T: Real>(&mut self, dst: &mut [T]) -> Result<()> {
        let raw = self.take(dst.len() * T::BYTES)?;
        for (d, chunk) in dst.iter_mut().zip(raw.chunks_exact(T::BYTES)) {
            *d = T::read_le(chunk);
        }
        Ok(())
    }
}

pub fn save_checkpoint<T: Real>(checkpoint: &Checkpoint<T>, path: &Path) -> Result<()> {
    write_atomic(path, &checkpoint.to_bytes()?)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Checkpoint of either precision, as found on disk.
#[derive(Debug, Clone)]
pub enum AnyCheckpoint {
    F32(Checkpoint<f32>),
    F64(Checkpoint<f64>),
}

impl AnyCheckpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        match bytes.get(12) {
            Some(8) => Checkpoint::from_bytes(&bytes).map(AnyCheckpoint::F64),
            _ => Checkpoint::from_bytes(&bytes).map(AnyCheckpoint::F32),
        }
    }

    pub fn precision(&self) -> Precision {
        match self {
            AnyCheckpoint::F32(_) => Precision::F32,
            AnyCheckpoint::F64(_) => Precision::F64,
        }
    }
}
