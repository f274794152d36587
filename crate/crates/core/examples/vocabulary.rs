//! Builds a capped vocabulary and shows how sentences are encoded, including
//! the `<unk>` fallback for words that did not make the cut.
//!
//! cargo run --example vocabulary [num_words]

use reqvae::corpus::load_corpus;
use reqvae::tokenizer::build_vocab;

fn main() -> reqvae::Result<()> {
    let num_words = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(40);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_requirements.txt");
    let corpus = load_corpus(&path)?;
    let vocab = build_vocab(&corpus, num_words)?;
    println!(
        "num_words={num_words}: kept {} words, {} entries including specials",
        vocab.kept_words(),
        vocab.len()
    );
    for (i, word) in vocab.words().take(12) {
        println!(
            "{i:>4}  {word:<12} {}",
            vocab.count(i).map_or(String::new(), |c| c.to_string())
        );
    }

    for sentence in [
        "The system shall encrypt all stored passwords.",
        "The robot shall paint the fence!",
    ] {
        let seq = vocab.encode(sentence);
        println!(
            "\n{sentence}\n  ids:     {:?}\n  decoded: {}",
            seq.0,
            vocab.decode(&seq)?
        );
    }
    Ok(())
}
