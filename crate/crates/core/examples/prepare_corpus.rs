//! Cleans a raw requirements file: multi-sentence entries are split, overly
//! long entries dropped and duplicates (after normalization) removed.
//!
//! cargo run --example prepare_corpus [raw.txt] [max_tokens]

use std::path::PathBuf;

use reqvae::corpus::{clean_corpus, corpus_stats, load_corpus, DEFAULT_MAX_TOKENS};

fn main() -> reqvae::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/raw_requirements.txt")
    });
    let max_tokens = args
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_MAX_TOKENS);

    let raw = load_corpus(&path)?;
    let clean = clean_corpus(&raw, max_tokens);
    println!("raw:   {}", corpus_stats(&raw));
    println!("clean: {}", corpus_stats(&clean));
    for entry in &clean.entries {
        println!("  {entry}");
    }
    Ok(())
}
