//! Trains a small model on the toy corpus, then walks the latent line between
//! two requirements and decodes each point greedily.
//!
//! cargo run --release --example interpolation [steps]

use reqvae::corpus::load_corpus;
use reqvae::embeddings::{build_embedding_matrix, EmbeddingTable};
use reqvae::generator::{format_interpolation, interpolate, DEFAULT_MAX_LEN};
use reqvae::tokenizer::build_vocab;
use reqvae::trainer::{
    embedding_seed, encode_corpus, train, Checkpoint, TrainOutputs, TrainingConfig,
};

fn main() -> reqvae::Result<()> {
    let steps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_requirements.txt");
    let corpus = load_corpus(&path)?;
    // A long warmup keeps the KL weight low over this short run, so the
    // latent code still carries the sentence.
    let config = TrainingConfig {
        epochs: 800,
        kl_warmup_steps: 4000,
        ..TrainingConfig::default()
    };
    let vocab = build_vocab(&corpus, config.num_words)?;
    let embedding = build_embedding_matrix::<f32>(
        &vocab,
        &EmbeddingTable::new(config.embedding_dim),
        embedding_seed(config.seed),
    );
    let mut checkpoint = Checkpoint::initialize(config, vocab, embedding.rows)?;
    let sequences = encode_corpus(&checkpoint.vocab, &corpus);
    train(&mut checkpoint, &sequences, &TrainOutputs::default())?;
    let last = checkpoint
        .history
        .last()
        .expect("trained at least one epoch");
    println!(
        "trained {} steps, final KL {:.3}\n",
        checkpoint.step, last.metrics.kl
    );

    let a = &corpus.entries[2];
    let b = &corpus.entries[20];
    println!("from: {a}\n  to: {b}\n");
    print!(
        "{}",
        format_interpolation(&interpolate(a, b, &checkpoint, steps, DEFAULT_MAX_LEN)?)
    );
    Ok(())
}
