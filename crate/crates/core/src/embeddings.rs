//! GloVe text-format word vectors and the model's embedding matrix.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::real::Real;
use crate::tokenizer::{Vocabulary, NUM_SPECIALS, PAD};

pub const DEFAULT_EMBEDDING_DIM: usize = 100;
/// Half-width of the uniform range for rows without a pretrained vector.
pub const OOV_INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Inserts unless the word is already present; returns whether it was.
    pub fn insert(&mut self, word: &str, vector: Vec<f32>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::dim("EmbeddingTable::insert", self.dim, vector.len()));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite component for `{word}`"
            )));
        }
        if self.vectors.contains_key(word) {
            return Ok(false);
        }
        self.vectors.insert(word.to_string(), vector);
        Ok(true)
    }

    /// Parses GloVe text lines (`word v1 … v_dim`). `source` names the input
    /// in error messages.
    pub fn parse<R: BufRead>(reader: R, dim: usize, source: &Path) -> Result<Self> {
        let fmt = |line: usize, message: String| Error::Format {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut table = EmbeddingTable::new(dim);
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let fields: Vec<&str> = parts.collect();
            if fields.len() != dim {
                return Err(fmt(
                    n + 1,
                    format!("expected {dim} components, found {}", fields.len()),
                ));
            }
            let mut vector = Vec::with_capacity(dim);
            for f in fields {
                let v: f32 = f
                    .parse()
                    .map_err(|_| fmt(n + 1, format!("non-numeric component `{f}`")))?;
                if !v.is_finite() {
                    return Err(fmt(n + 1, format!("non-finite component `{f}`")));
                }
                vector.push(v);
            }
            table.insert(word, vector)?;
        }
        Ok(table)
    }
}

/// Loads a GloVe text file, transparently decompressing `.gz` paths.
pub fn load_embeddings(path: &Path, dim: usize) -> Result<EmbeddingTable> {
    if dim == 0 {
        return Err(Error::config("embedding_dim", "must be positive"));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let table = EmbeddingTable::parse(BufReader::new(reader), dim, path)?;
    log::info!(
        "loaded {} vectors of dim {} from {}",
        table.len(),
        dim,
        path.display()
    );
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    /// `V × dim`; row `k` embeds vocabulary index `k`.
    pub rows: Matrix<T>,
    pub trainable: bool,
    /// Vocabulary words that received a pretrained vector.
    pub matched: usize,
}

impl<T: Real> EmbeddingMatrix<T> {
    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    /// Fraction of corpus words with a pretrained vector.
    pub fn coverage(&self) -> f64 {
        let words = self.rows.rows().saturating_sub(NUM_SPECIALS);
        if words == 0 {
            0.0
        } else {
            self.matched as f64 / words as f64
        }
    }
}

/// PAD row zero, pretrained rows copied verbatim, every other row drawn from
/// U(−0.05, 0.05) with a generator seeded by `seed`.
pub fn build_embedding_matrix<T: Real>(
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    seed: u64,
) -> EmbeddingMatrix<T> {
    let dim = table.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Matrix::zeros(vocab.len(), dim);
    let mut matched = 0;
    for k in 0..vocab.len() {
        if k == PAD {
            continue;
        }
        let pretrained = (k >= NUM_SPECIALS)
            .then(|| vocab.word(k).and_then(|w| table.get(w)))
            .flatten();
        let row = rows.row_mut(k);
        match pretrained {
            Some(v) => {
                matched += 1;
                for (r, &x) in row.iter_mut().zip(v) {
                    *r = T::from_f64(x as f64);
                }
            }
            None => {
                for r in row.iter_mut() {
                    *r = T::from_f64(rng.gen_range(-OOV_INIT_RANGE..OOV_INIT_RANGE));
                }
            }
        }
    }
    let m = EmbeddingMatrix {
        rows,
        trainable: true,
        matched,
    };
    log::info!(
        "embedding coverage: {}/{} vocabulary words ({:.1}%)",
        matched,
        vocab.kept_words(),
        100.0 * m.coverage()
    );
    m
}
