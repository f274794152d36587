//! Loads GloVe-format word vectors and builds the embedding matrix for a
//! vocabulary. Words without a pretrained vector get small random rows.
//!
//! cargo run --example embeddings [vectors.txt[.gz] dim]

use std::path::PathBuf;

use reqvae::corpus::load_corpus;
use reqvae::embeddings::{build_embedding_matrix, load_embeddings};
use reqvae::tokenizer::build_vocab;

fn main() -> reqvae::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| data.join("tiny_vectors.txt"));
    let dim = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);

    let table = load_embeddings(&path, dim)?;
    let corpus = load_corpus(&data.join("toy_requirements.txt"))?;
    let vocab = build_vocab(&corpus, 4000)?;
    let matrix = build_embedding_matrix::<f32>(&vocab, &table, 0);
    println!(
        "{} vectors loaded; {} of {} vocabulary words matched ({:.1}% coverage)",
        table.len(),
        matrix.matched,
        vocab.kept_words(),
        100.0 * matrix.coverage()
    );
    for word in ["shall", "password", "scheduler"] {
        let row = vocab.index(word).map(|i| matrix.rows.row(i).to_vec());
        let source = if table.get(word).is_some() {
            "pretrained"
        } else {
            "random"
        };
        println!("{word:<10} {source:<10} {:?}", row.map(|r| r[..4].to_vec()));
    }
    Ok(())
}
