//! Trains the vanilla configuration (no KL annealing, no word dropout) on
//! 500 synthetic requirements and shows the KL term collapsing toward zero,
//! after which prior samples degrade to the corpus's most frequent words.
//!
//! cargo run --release --example posterior_collapse [epochs]

use reqvae::embeddings::{build_embedding_matrix, EmbeddingTable};
use reqvae::generator::{sample_prior, DEFAULT_MAX_LEN};
use reqvae::synthetic::shall_corpus;
use reqvae::tokenizer::build_vocab;
use reqvae::trainer::{
    embedding_seed, encode_corpus, train, Checkpoint, TrainOutputs, TrainingConfig,
};

fn main() -> reqvae::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let corpus = shall_corpus(500, 1);
    let config = TrainingConfig {
        epochs,
        kl_warmup_steps: 0,
        word_dropout: 0.0,
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
    let report = train(&mut checkpoint, &sequences, &TrainOutputs::default())?;
    for r in &report.epochs {
        println!(
            "epoch {:>3}  recon {:>8.3}  kl {:>7.4}  acc {:.3}  ppl {:>7.3}  {:.1}s",
            r.epoch,
            r.metrics.recon,
            r.metrics.kl,
            r.metrics.accuracy,
            r.metrics.perplexity,
            r.wall_time_s
        );
    }

    let mut words: Vec<(u64, &str)> = checkpoint
        .vocab
        .words()
        .filter_map(|(i, w)| checkpoint.vocab.count(i).map(|c| (c, w)))
        .collect();
    words.sort_by_key(|&(n, _)| std::cmp::Reverse(n));
    let top: Vec<&str> = words.iter().take(10).map(|&(_, w)| w).collect();
    println!("most frequent words: {}", top.join(" "));
    println!("prior samples:");
    for s in sample_prior(8, &checkpoint, DEFAULT_MAX_LEN, 0.0, 0)? {
        println!("  {s}");
    }
    Ok(())
}
