//! Frequency-ranked vocabulary and sentence ↔ index conversion.
//!
//! Indices 0–3 are reserved for `<pad>`, `<sos>`, `<eos>` and `<unk>`.
//! Corpus words follow in order of descending frequency (ties by first
//! occurrence) and at most `num_words − 1` of them are kept. Words outside
//! the vocabulary encode to `<unk>` instead of being dropped.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::RequirementsCorpus;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const NUM_SPECIALS: usize = 4;
pub const SPECIAL_TOKENS: [&str; NUM_SPECIALS] = ["<pad>", "<sos>", "<eos>", "<unk>"];

/// ASCII punctuation plus tab and newline.
pub const DEFAULT_FILTERS: &str = "!\"#$%&()*+,-./:;<=>?@[\\]^_`{|}~\t\n";
pub const DEFAULT_NUM_WORDS: usize = 4000;

/// Lowercases, replaces every character of `filters` by a space, and
/// collapses whitespace runs.
pub fn normalize(text: &str, filters: &str) -> String {
    let replaced: String = text
        .chars()
        .map(|c| if filters.contains(c) { ' ' } else { c })
        .collect();
    replaced
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// A sentence as vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(pub Vec<usize>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for TokenSequence {
    fn from(v: Vec<usize>) -> Self {
        TokenSequence(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    word_to_index: HashMap<String, usize>,
    index_to_word: Vec<String>,
    /// Frequencies of the kept corpus words.
    counts: Vec<u64>,
    num_words: usize,
    filters: String,
}

impl Vocabulary {
    /// Counts words over the normalized entries and keeps the
    /// `num_words − 1` most frequent.
    pub fn build<S: AsRef<str>>(entries: &[S], num_words: usize) -> Result<Self> {
        if num_words < 2 {
            return Err(Error::config(
                "num_words",
                format!("must be at least 2, got {num_words}"),
            ));
        }
        if entries.is_empty() {
            return Err(Error::Contract(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        let mut first_seen: HashMap<String, usize> = HashMap::new();
        let mut tally: Vec<(String, u64)> = Vec::new();
        for entry in entries {
            for word in normalize(entry.as_ref(), DEFAULT_FILTERS)
                .split(' ')
                .filter(|w| !w.is_empty())
            {
                match first_seen.get(word) {
                    Some(&k) => tally[k].1 += 1,
                    None => {
                        first_seen.insert(word.to_string(), tally.len());
                        tally.push((word.to_string(), 1));
                    }
                }
            }
        }
        // Stable sort keeps first-occurrence order among equal counts.
        tally.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
        tally.truncate(num_words - 1);

        let mut vocab = Self::with_specials(num_words);
        for (word, count) in tally {
            vocab.push(word, count);
        }
        Ok(vocab)
    }

    fn with_specials(num_words: usize) -> Self {
        let mut v = Vocabulary {
            word_to_index: HashMap::new(),
            index_to_word: Vec::new(),
            counts: Vec::new(),
            num_words,
            filters: DEFAULT_FILTERS.to_string(),
        };
        for s in SPECIAL_TOKENS {
            v.word_to_index.insert(s.to_string(), v.index_to_word.len());
            v.index_to_word.push(s.to_string());
        }
        v
    }

    fn push(&mut self, word: String, count: u64) {
        self.word_to_index
            .insert(word.clone(), self.index_to_word.len());
        self.index_to_word.push(word);
        self.counts.push(count);
    }

    /// Total index count including the specials (the model's `V`).
    pub fn len(&self) -> usize {
        self.index_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kept_words(&self) -> usize {
        self.index_to_word.len() - NUM_SPECIALS
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.index_to_word.get(index).map(String::as_str)
    }

    /// Corpus frequency of a kept word (specials report 0).
    pub fn count(&self, index: usize) -> Option<u64> {
        if index < NUM_SPECIALS {
            (index < self.len()).then_some(0)
        } else {
            self.counts.get(index - NUM_SPECIALS).copied()
        }
    }

    /// Kept corpus words in index order.
    pub fn words(&self) -> impl Iterator<Item = (usize, &str)> {
        self.index_to_word
            .iter()
            .enumerate()
            .skip(NUM_SPECIALS)
            .map(|(i, w)| (i, w.as_str()))
    }

    pub fn normalize(&self, text: &str) -> String {
        normalize(text, &self.filters)
    }

    /// `[SOS, w₁ … wₙ, EOS]` with unknown words mapped to `UNK`.
    pub fn encode(&self, sentence: &str) -> TokenSequence {
        let norm = self.normalize(sentence);
        let mut seq = vec![SOS];
        seq.extend(
            norm.split(' ')
                .filter(|w| !w.is_empty())
                .map(|w| self.index(w).unwrap_or(UNK)),
        );
        seq.push(EOS);
        TokenSequence(seq)
    }

    /// Joins words with single spaces, skipping `PAD`/`SOS`/`EOS`.
    pub fn decode(&self, seq: &TokenSequence) -> Result<String> {
        let mut words = Vec::with_capacity(seq.len());
        for &i in seq.as_slice() {
            match i {
                PAD | SOS | EOS => {}
                _ => words.push(self.word(i).ok_or(Error::Decode(i))?),
            }
        }
        Ok(words.join(" "))
    }

    /// `index<TAB>word<TAB>count` lines, specials first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.index_to_word.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{w}\t{}", self.count(i).unwrap_or(0));
        }
        out
    }

    pub fn from_text(text: &str, num_words: usize) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Format {
            path: "<vocabulary>".into(),
            line,
            message,
        };
        let mut vocab = Self::with_specials(num_words);
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad(
                    n + 1,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| bad(n + 1, format!("bad index `{}`", fields[0])))?;
            let count: u64 = fields[2]
                .parse()
                .map_err(|_| bad(n + 1, format!("bad count `{}`", fields[2])))?;
            if index != n {
                return Err(bad(n + 1, format!("index {index} out of sequence")));
            }
            if index < NUM_SPECIALS {
                if fields[1] != SPECIAL_TOKENS[index] {
                    return Err(bad(
                        n + 1,
                        format!("expected special `{}`", SPECIAL_TOKENS[index]),
                    ));
                }
            } else {
                if vocab.word_to_index.contains_key(fields[1]) {
                    return Err(bad(n + 1, format!("duplicate word `{}`", fields[1])));
                }
                vocab.push(fields[1].to_string(), count);
            }
        }
        if vocab.kept_words() > num_words.saturating_sub(1) {
            return Err(Error::config(
                "num_words",
                format!(
                    "{} words exceed capacity {}",
                    vocab.kept_words(),
                    num_words - 1
                ),
            ));
        }
        Ok(vocab)
    }
}

pub fn build_vocab(corpus: &RequirementsCorpus, num_words: usize) -> Result<Vocabulary> {
    Vocabulary::build(&corpus.entries, num_words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> String {
        normalize(s, DEFAULT_FILTERS)
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(n("The system shall notify!"), "the system shall notify");
        assert_eq!(n("Log-in, then search."), "log in then search");
        assert_eq!(n(""), "");
        assert_eq!(n("  a\t\tb\nc  "), "a b c");
    }

    #[test]
    fn keeps_num_words_minus_one() {
        let words: Vec<String> = (0..15).map(|i| format!("w{i}")).collect();
        let v = Vocabulary::build(&[words.join(" ")], 10).unwrap();
        assert_eq!(v.kept_words(), 9);
        assert_eq!(v.len(), 13);
    }

    #[test]
    fn ties_break_by_first_occurrence() {
        let v = Vocabulary::build(&["a b a c b a b"], 3).unwrap();
        let (a, b) = (v.index("a").unwrap(), v.index("b").unwrap());
        assert!(a < b);
        assert_eq!(v.index("c"), None);
        assert_eq!(v.kept_words(), 2);
    }

    #[test]
    fn all_words_kept_when_capacity_allows() {
        let v = Vocabulary::build(&["x y z"], 100).unwrap();
        assert_eq!(v.kept_words(), 3);
    }

    #[test]
    fn num_words_below_two_is_config_error() {
        let err = Vocabulary::build(&["a"], 1).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "num_words"));
    }

    #[test]
    fn encode_shapes() {
        let v = Vocabulary::build(&["the system shall log"], 10).unwrap();
        let s = v.encode("The system shall");
        assert_eq!(s.len(), 5);
        assert_eq!(s.0[0], SOS);
        assert_eq!(*s.0.last().unwrap(), EOS);
        assert_eq!(v.encode("the printer shall").0[2], UNK);
        assert_eq!(v.encode("").0, vec![SOS, EOS]);
    }

    #[test]
    fn decode_cases() {
        let v = Vocabulary::build(&["the system shall log"], 10).unwrap();
        assert_eq!(v.decode(&TokenSequence(vec![SOS, EOS])).unwrap(), "");
        let s = v.encode("The system shall fly");
        assert_eq!(v.decode(&s).unwrap(), "the system shall <unk>");
        assert!(matches!(
            v.decode(&TokenSequence(vec![SOS, 99])),
            Err(Error::Decode(99))
        ));
        let padded = TokenSequence(vec![SOS, 4, 5, EOS, PAD, PAD]);
        assert_eq!(v.decode(&padded).unwrap(), "the system");
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::build(&["b a b c", "c c d"], 4).unwrap();
        let text = v.to_text();
        assert!(text.starts_with("0\t<pad>\t0\n1\t<sos>\t0\n2\t<eos>\t0\n3\t<unk>\t0\n"));
        assert!(text.contains("4\tc\t3\n"));
        assert_eq!(Vocabulary::from_text(&text, 4).unwrap(), v);
        assert!(Vocabulary::from_text("0\t<pad>\n", 4).is_err());
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::collection::vec(
                prop::sample::select(vec![
                    "the", "system", "shall", "user", "log", "allow", "report", "data", "to", "be",
                    "able", "admin", "page", "order", "must",
                ]),
                1..12,
            )
            .prop_map(|w| w.join(" ")),
            1..20,
        )
    }

    proptest! {
        #[test]
        fn capacity_and_monotone_frequency(corpus in corpus_strategy(), num_words in 2usize..20) {
            let v = Vocabulary::build(&corpus, num_words).unwrap();
            prop_assert!(v.kept_words() < num_words);
            let kept: Vec<(usize, u64)> = v.words().map(|(i, _)| (i, v.count(i).unwrap())).collect();
            for w in kept.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
            for (i, w) in v.words() {
                prop_assert_eq!(v.index(w), Some(i));
            }
            prop_assert_eq!(Vocabulary::build(&corpus, num_words).unwrap(), v);
        }

        #[test]
        fn round_trip_in_vocabulary(corpus in corpus_strategy(), pick in prop::collection::vec(0usize..1000, 0..15)) {
            let v = Vocabulary::build(&corpus, 100).unwrap();
            let words: Vec<&str> = v.words().map(|(_, w)| w).collect();
            let sentence: Vec<&str> = pick.iter().map(|k| words[k % words.len()]).collect();
            let s = sentence.join(" ");
            prop_assert_eq!(v.decode(&v.encode(&s)).unwrap(), n(&s));
        }
    }
}
