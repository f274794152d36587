//! Overfits the VAE on 32 synthetic requirement sentences at the default
//! hyperparameters and reports how well it reconstructs them.
//!
//! cargo run --release --example train_toy [corpus.txt|synthetic] [seed]

use std::path::Path;
use std::time::Instant;

use reqvae::corpus::load_corpus;
use reqvae::embeddings::{build_embedding_matrix, EmbeddingTable};
use reqvae::generator::{reconstruct, DEFAULT_MAX_LEN};
use reqvae::synthetic::shall_corpus;
use reqvae::tokenizer::build_vocab;
use reqvae::trainer::{
    embedding_seed, encode_corpus, evaluate, train, Checkpoint, TrainOutputs, TrainingConfig,
};

fn main() -> reqvae::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1);
    let corpus = match args.next().as_deref() {
        None | Some("synthetic") => shall_corpus(32, 0),
        Some(path) => load_corpus(Path::new(path))?,
    };
    let config = TrainingConfig {
        // One batch per epoch, so epochs == optimizer steps.
        epochs: 2000,
        seed: args.next().and_then(|s| s.parse().ok()).unwrap_or(0),
        ..TrainingConfig::default()
    };
    let vocab = build_vocab(&corpus, config.num_words)?;
    let table = EmbeddingTable::new(config.embedding_dim);
    let embedding = build_embedding_matrix::<f32>(&vocab, &table, embedding_seed(config.seed));
    println!("{} sentences, vocabulary of {}", corpus.len(), vocab.len());

    let mut checkpoint = Checkpoint::initialize(config, vocab, embedding.rows)?;
    let sequences = encode_corpus(&checkpoint.vocab, &corpus);
    let start = Instant::now();
    let report = train(&mut checkpoint, &sequences, &TrainOutputs::default())?;
    for r in report.epochs.iter().filter(|r| r.epoch % 200 == 199) {
        println!(
            "step {:>5}  total {:>8.3}  recon {:>8.3}  kl {:>7.3}  kl_weight {:.2}  acc {:.3}",
            r.step,
            r.metrics.total,
            r.metrics.recon,
            r.metrics.kl,
            r.metrics.kl_weight,
            r.metrics.accuracy
        );
    }
    println!(
        "trained {} steps in {:.1}s",
        checkpoint.step,
        start.elapsed().as_secs_f64()
    );

    let metrics = evaluate(&checkpoint, &corpus)?;
    println!(
        "evaluation: accuracy {:.4}, perplexity {:.3}",
        metrics.accuracy, metrics.perplexity
    );
    let mut exact = 0;
    for sentence in &corpus.entries {
        let out = reconstruct(sentence, &checkpoint, DEFAULT_MAX_LEN)?;
        if out == checkpoint.vocab.normalize(sentence) {
            exact += 1;
        } else {
            println!(
                "  miss: {}\n     -> {out}",
                checkpoint.vocab.normalize(sentence)
            );
        }
    }
    println!("exact reconstructions: {exact}/{}", corpus.len());
    for sentence in corpus.entries.iter().take(3) {
        println!(
            "  {sentence}\n  -> {}",
            reconstruct(sentence, &checkpoint, DEFAULT_MAX_LEN)?
        );
    }
    Ok(())
}
